import os

import numpy as np
import pytest

from causalgrid.chemistry import ChemConfig, ChemistryEnv
from causalgrid.errors import DecodeError
from causalgrid.graphs import GraphSpec
from causalgrid.physics import PhysicsConfig, PhysicsState, reset, weight_order
from causalgrid.render import (
    CELL_PX,
    PALETTE,
    SHAPE_MASKS,
    Frame,
    canonical_order,
    decode_oracle,
    draw_cell,
    encode_png,
    render,
)

GOLDEN_DIR = os.path.join(os.path.dirname(__file__), "golden")


def test_shape_masks_distinct():
    for i in range(len(SHAPE_MASKS)):
        for j in range(i + 1, len(SHAPE_MASKS)):
            assert not np.array_equal(SHAPE_MASKS[i], SHAPE_MASKS[j])
    for mask in SHAPE_MASKS:
        assert mask.shape == (CELL_PX, CELL_PX)
        assert mask.any()


def test_palette_separation():
    for i in range(len(PALETTE)):
        assert PALETTE[i] != (0, 0, 0)
        for j in range(i + 1, len(PALETTE)):
            assert max(abs(a - b) for a, b in zip(PALETTE[i], PALETTE[j])) >= 32


def test_empty_state_renders_black():
    config = PhysicsConfig(num_objects=1, grid_size=5, setting="observed", seed=0)
    empty = PhysicsState((), (), (), ())
    frame = render(empty, config)
    assert frame.width == frame.height == 50 and frame.channels == 3
    assert not frame.pixels.any()


def test_single_square_mask_placement():
    pixels = np.zeros((50, 50, 3), dtype=np.uint8)
    draw_cell(pixels, 0, 0, 0, (255, 255, 255))
    block = pixels[:10, :10]
    assert np.array_equal(block.any(axis=2), SHAPE_MASKS[0])
    assert not pixels[10:, :].any() and not pixels[:, 10:].any()


def test_physics_roundtrip_all_settings():
    for setting in ("observed", "unobserved", "fixed_unobserved"):
        config = PhysicsConfig(num_objects=5, grid_size=5, setting=setting,
                               palette_size=8, seed=3)
        for seed in range(100):
            state = reset(config, seed)
            decoded = decode_oracle(render(state, config), config)
            assert decoded == canonical_order(state)


def test_chemistry_roundtrip_static():
    config = ChemConfig(num_objects=5, num_colors=5, graph=GraphSpec("collider", 5),
                        skewness=5.0, seed=3)
    env = ChemistryEnv(config)
    for seed in range(100):
        state = env.reset(seed)
        assert decode_oracle(render(state, config), config) == state


def test_decode_zero_frame_is_empty():
    config = PhysicsConfig(num_objects=1, grid_size=5, setting="observed", seed=0)
    frame = Frame(np.zeros((50, 50, 3), dtype=np.uint8))
    assert decode_oracle(frame, config) == PhysicsState((), (), (), ())


def test_corrupted_pixel_raises():
    config = PhysicsConfig(num_objects=3, grid_size=5, setting="unobserved",
                           palette_size=6, seed=3)
    state = reset(config, 0)
    frame = render(state, config)
    pixels = frame.pixels.copy()
    row, col = state.positions[0]
    pixels[row * 10 + 5, col * 10 + 5] = (1, 2, 3)
    with pytest.raises(DecodeError):
        decode_oracle(Frame(pixels), config)


def test_observed_pixel_intensity_order_matches_weight_order():
    config = PhysicsConfig(num_objects=5, grid_size=5, setting="observed", seed=4)
    for seed in range(20):
        state = reset(config, seed)
        frame = render(state, config)
        pixel_levels = []
        for r, c in state.positions:
            block = frame.pixels[r * 10:(r + 1) * 10, c * 10:(c + 1) * 10]
            pixel_levels.append(int(block[..., 2].max()))
        assert np.argsort(pixel_levels).tolist() == np.argsort(state.weights).tolist()


def test_render_ignores_weights():
    # the observation carries no weight information beyond the color rule
    config = PhysicsConfig(num_objects=3, grid_size=5, setting="unobserved",
                           palette_size=6, seed=5)
    state = reset(config, 1)
    switched = PhysicsState(state.positions, tuple(reversed(state.weights)),
                            state.colors, state.shapes)
    assert render(state, config) == render(switched, config)


def test_golden_png_bytes_stable():
    config = PhysicsConfig(num_objects=5, grid_size=5, setting="fixed_unobserved",
                           palette_size=8, seed=11)
    frame = render(reset(config, 2024), config)
    with open(os.path.join(GOLDEN_DIR, "frame_physics_fixedunobserved.png"), "rb") as fh:
        assert frame.to_png() == fh.read()

    cconfig = ChemConfig(num_objects=5, num_colors=5, graph=GraphSpec("collider", 5),
                         skewness=10.0, seed=11)
    cframe = render(ChemistryEnv(cconfig).reset(2024), cconfig)
    with open(os.path.join(GOLDEN_DIR, "frame_chemistry_static.png"), "rb") as fh:
        assert cframe.to_png() == fh.read()


def test_png_signature_and_determinism():
    pixels = np.zeros((50, 50, 3), dtype=np.uint8)
    draw_cell(pixels, 2, 2, 1, (0, 255, 0))
    data = encode_png(pixels)
    assert data.startswith(b"\x89PNG\r\n\x1a\n")
    assert data == encode_png(pixels)


def test_static_layout_frames_differ_only_in_colors():
    config = ChemConfig(num_objects=4, num_colors=5, graph=GraphSpec("chain", 4),
                        skewness=2.0, seed=9)
    env = ChemistryEnv(config)
    frames = [render(env.reset(seed), config) for seed in range(6)]
    occupancy = [f.pixels.any(axis=2) for f in frames]
    for other in occupancy[1:]:
        assert np.array_equal(occupancy[0], other)
