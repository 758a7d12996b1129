"""Rasterize symbolic states to small RGB frames, and decode them back.

Each object occupies one 10x10-pixel cell and is drawn as a flat-filled
binary sprite. Rendering writes exact u8 values on a black background, so
`decode_oracle` can invert it exactly: the per-cell sprite identifies the
shape and the fill value identifies the (quantized) color.
"""

import struct
import zlib
from dataclasses import dataclass

import numpy as np

from .chemistry import ChemConfig, ChemState, static_layout
from .errors import ConfigError, DecodeError
from .physics import PhysicsConfig, PhysicsState

CELL_PX = 10

SHAPE_NAMES = ("square", "circle", "triangle", "diamond", "plus")


def _build_masks():
    yy, xx = np.mgrid[0:CELL_PX, 0:CELL_PX]
    cy = cx = (CELL_PX - 1) / 2
    square = np.ones((CELL_PX, CELL_PX), dtype=bool)
    circle = (yy - cy) ** 2 + (xx - cx) ** 2 <= cy**2
    triangle = np.abs(xx - cx) <= (yy + 1) * 0.5
    diamond = np.abs(yy - cy) + np.abs(xx - cx) <= CELL_PX / 2
    plus = np.zeros((CELL_PX, CELL_PX), dtype=bool)
    plus[3:7, :] = True
    plus[:, 3:7] = True
    return (square, circle, triangle, diamond, plus)


SHAPE_MASKS = _build_masks()

# Discrete colormap: entries pairwise differ by >= 32 in some channel and
# none is the (0,0,0) background. Index order is the global weight order
# in the unobserved physics settings.
PALETTE = (
    (255, 0, 0),
    (0, 255, 0),
    (0, 0, 255),
    (255, 255, 0),
    (255, 0, 255),
    (0, 255, 255),
    (255, 128, 0),
    (128, 0, 255),
    (0, 128, 0),
    (128, 64, 0),
    (0, 128, 255),
    (255, 128, 128),
    (128, 255, 0),
    (0, 64, 128),
    (192, 192, 192),
    (128, 0, 64),
)

# Observed-setting base color: intensity c maps to (0, 0, round(255 c)).
OBSERVED_CHANNEL = 2


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray  # (H, W, 3) uint8, background exactly (0,0,0)

    @property
    def width(self):
        return self.pixels.shape[1]

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def channels(self):
        return self.pixels.shape[2]

    def tobytes(self):
        return self.pixels.tobytes()

    def to_png(self):
        return encode_png(self.pixels)

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(self.to_png())

    def __eq__(self, other):
        return isinstance(other, Frame) and np.array_equal(self.pixels, other.pixels)


def encode_png(pixels):
    """Minimal deterministic PNG writer (8-bit RGB, filter 0, zlib level 6)."""
    pixels = np.ascontiguousarray(pixels, dtype=np.uint8)
    h, w = pixels.shape[:2]
    raw = b"".join(b"\x00" + pixels[y].tobytes() for y in range(h))

    def chunk(tag, data):
        body = tag + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body))

    ihdr = struct.pack(">IIBBBBB", w, h, 8, 2, 0, 0, 0)
    return (
        b"\x89PNG\r\n\x1a\n"
        + chunk(b"IHDR", ihdr)
        + chunk(b"IDAT", zlib.compress(raw, 6))
        + chunk(b"IEND", b"")
    )


def intensity_rgb(intensity):
    rgb = [0, 0, 0]
    rgb[OBSERVED_CHANNEL] = int(round(intensity * 255))
    return tuple(rgb)


def draw_cell(pixels, row, col, shape_id, rgb):
    mask = SHAPE_MASKS[shape_id]
    block = pixels[row * CELL_PX:(row + 1) * CELL_PX, col * CELL_PX:(col + 1) * CELL_PX]
    block[mask] = rgb


def render(state, config):
    """Draw a PhysicsState or ChemState onto a (10 G)^2 black canvas."""
    if isinstance(config, ChemConfig):
        grid = config.grid_size
        if config.num_colors > len(PALETTE):
            raise ConfigError("K", f"renderer palette holds {len(PALETTE)} colors")
    else:
        grid = config.grid_size
        if config.setting != "observed" and config.palette_size > len(PALETTE):
            raise ConfigError("palette", f"renderer palette holds {len(PALETTE)} colors")
    pixels = np.zeros((grid * CELL_PX, grid * CELL_PX, 3), dtype=np.uint8)
    if isinstance(state, PhysicsState) and isinstance(config, PhysicsConfig):
        for pos, color, shape in zip(state.positions, state.colors, state.shapes):
            rgb = intensity_rgb(color) if config.setting == "observed" else PALETTE[color]
            draw_cell(pixels, pos[0], pos[1], shape, rgb)
    elif isinstance(state, ChemState):
        for pos, color, shape in zip(state.positions, state.colors, state.shapes):
            draw_cell(pixels, pos[0], pos[1], shape, PALETTE[color])
    else:
        raise TypeError(f"cannot render {type(state).__name__} with {type(config).__name__}")
    pixels.flags.writeable = False
    return Frame(pixels)


def _decode_cells(pixels, grid):
    """Yield (row, col, shape_id, rgb) for every non-empty cell, row-major."""
    for row in range(grid):
        for col in range(grid):
            block = pixels[row * CELL_PX:(row + 1) * CELL_PX, col * CELL_PX:(col + 1) * CELL_PX]
            mask = block.any(axis=2)
            if not mask.any():
                continue
            shape_id = None
            for sid, known in enumerate(SHAPE_MASKS):
                if np.array_equal(mask, known):
                    shape_id = sid
                    break
            if shape_id is None:
                raise DecodeError(f"cell ({row},{col}) matches no known shape")
            values = block[mask]
            rgb = tuple(int(v) for v in values[0])
            if not (values == values[0]).all():
                raise DecodeError(f"cell ({row},{col}) is not flat-filled")
            yield row, col, shape_id, rgb


def decode_oracle(frame, config):
    """Invert render exactly; raises DecodeError on any unknown cell pattern.

    Physics objects come back in row-major cell order with weights rebuilt
    from the setting's color-order rule. Chemistry objects are matched to
    node ids through the static layout; dynamic layouts fall back to
    row-major order since node identity is not observable then.
    """
    pixels = frame.pixels
    if isinstance(config, PhysicsConfig):
        cells = list(_decode_cells(pixels, config.grid_size))
        positions, colors, shapes = [], [], []
        for row, col, shape_id, rgb in cells:
            positions.append((row, col))
            shapes.append(shape_id)
            if config.setting == "observed":
                if rgb[0] != 0 or rgb[1] != 0:
                    raise DecodeError(f"cell ({row},{col}) color {rgb} is not an intensity fill")
                colors.append(rgb[OBSERVED_CHANNEL] / 255.0)
            else:
                try:
                    colors.append(PALETTE.index(rgb))
                except ValueError:
                    raise DecodeError(f"cell ({row},{col}) color {rgb} not in palette") from None
                if colors[-1] >= config.palette_size:
                    raise DecodeError(f"cell ({row},{col}) color index beyond palette size")
        m = len(positions)
        ascending = sorted(range(m), key=lambda i: colors[i])
        weights = [0.0] * m
        for rank_from_lightest, idx in enumerate(ascending):
            weights[idx] = float(rank_from_lightest + 1)
        return PhysicsState(tuple(positions), tuple(weights), tuple(colors), tuple(shapes))

    if isinstance(config, ChemConfig):
        cells = list(_decode_cells(pixels, config.grid_size))
        if len(cells) != config.num_objects:
            raise DecodeError(f"expected {config.num_objects} objects, found {len(cells)}")
        for _, _, _, rgb in cells:
            if rgb not in PALETTE[:config.num_colors]:
                raise DecodeError(f"color {rgb} not among the {config.num_colors} palette entries")
        if config.layout == "static":
            layout = static_layout(config)
            by_pos = {(row, col): (shape_id, rgb) for row, col, shape_id, rgb in cells}
            colors, shapes = [], []
            for pos in layout:
                if pos not in by_pos:
                    raise DecodeError(f"no object at static-layout cell {pos}")
                shape_id, rgb = by_pos[pos]
                shapes.append(shape_id)
                colors.append(PALETTE.index(rgb))
            return ChemState(tuple(colors), tuple(layout), tuple(shapes))
        positions = tuple((row, col) for row, col, _, _ in cells)
        shapes = tuple(shape_id for _, _, shape_id, _ in cells)
        colors = tuple(PALETTE.index(rgb) for _, _, _, rgb in cells)
        return ChemState(colors, positions, shapes)

    raise TypeError(f"cannot decode with {type(config).__name__}")


def canonical_order(state):
    """Reorder a PhysicsState's objects row-major by cell, as decode_oracle emits them."""
    order = sorted(range(len(state.positions)), key=lambda i: state.positions[i])
    return PhysicsState(
        tuple(state.positions[i] for i in order),
        tuple(state.weights[i] for i in order),
        tuple(state.colors[i] for i in order),
        tuple(state.shapes[i] for i in order),
    )
