"""Image I/O, 16x16 block partitioning, channel histograms, overlay rendering.

The interchange format is binary PPM (P6, maxval 255): dependency-free and
byte-exact, so decode(encode(img)) round-trips pixel values unchanged. PNG
is available as an optional adapter when Pillow is installed.

Channel indices follow 1 = red, 2 = green, 3 = blue throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .entropy import BINS
from .errors import DecodeError

DEFAULT_BLOCK_SIZE = 16

#: Overlay colors for the three land-cover classes.
DEFAULT_PALETTE = {
    "aquatic": (255, 255, 0),     # yellow
    "urban": (0, 255, 255),       # cyan
    "vegetation": (255, 0, 255),  # magenta
}

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _next_token(data: bytes, pos: int) -> tuple[bytes, int, int]:
    """Scan the next header token, skipping whitespace and '#' comments.

    Returns (token, token_start, position_after_token).
    """
    n = len(data)
    while pos < n:
        c = data[pos]
        if c in _WHITESPACE:
            pos += 1
        elif c == 0x23:  # '#'
            while pos < n and data[pos] != 0x0A:
                pos += 1
        else:
            break
    if pos >= n:
        raise DecodeError(pos, "unexpected end of data while reading header")
    start = pos
    while pos < n and data[pos] not in _WHITESPACE and data[pos] != 0x23:
        pos += 1
    return data[start:pos], start, pos


def _header_int(data: bytes, pos: int, what: str) -> tuple[int, int]:
    token, start, pos = _next_token(data, pos)
    try:
        value = int(token)
    except ValueError:
        raise DecodeError(start, f"expected integer {what}, got {token!r}") from None
    return value, pos


def decode_ppm(data: bytes) -> np.ndarray:
    """Decode binary PPM (P6, maxval 255) into an (h, w, 3) uint8 array.

    Header comments are skipped; the payload must hold exactly
    width * height * 3 bytes. Raises DecodeError naming the byte offset
    and reason otherwise.
    """
    magic, start, pos = _next_token(data, 0)
    if magic != b"P6" or start != 0:
        raise DecodeError(start, f"not a binary PPM (expected magic 'P6', got {magic!r})")
    width, pos = _header_int(data, pos, "width")
    height, pos = _header_int(data, pos, "height")
    if width <= 0 or height <= 0:
        raise DecodeError(2, f"image dimensions must be positive, got {width}x{height}")
    maxval, pos = _header_int(data, pos, "maxval")
    if maxval != 255:
        raise DecodeError(pos, f"unsupported maxval {maxval} (only 255 is handled)")
    if pos >= len(data) or data[pos] not in _WHITESPACE:
        raise DecodeError(pos, "expected single whitespace byte after maxval")
    payload = data[pos + 1:]
    expected = width * height * 3
    if len(payload) != expected:
        raise DecodeError(
            pos + 1,
            f"payload holds {len(payload)} bytes, expected {expected} "
            f"for {width}x{height} pixels",
        )
    return np.frombuffer(payload, dtype=np.uint8).reshape(height, width, 3).copy()


def encode_ppm(image: np.ndarray) -> bytes:
    """Encode an (h, w, 3) uint8 array as canonical P6 bytes.

    The canonical header is ``P6\\n<width> <height>\\n255\\n``.
    """
    arr = _check_image(image)
    h, w = arr.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + arr.tobytes()


def _check_image(image) -> np.ndarray:
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"expected an (h, w, 3) RGB array, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    if arr.dtype != np.uint8:
        if np.any(arr < 0) or np.any(arr > 255):
            raise ValueError("pixel components must lie in [0, 255]")
        arr = arr.astype(np.uint8)
    return arr


def read_image(path) -> np.ndarray:
    """Read a PPM (P6) or PNG file into an (h, w, 3) uint8 array."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] == b"P6":
        return decode_ppm(data)
    if data[:8] == b"\x89PNG\r\n\x1a\n":
        return _decode_png(data)
    raise DecodeError(0, f"unrecognized image format in {path}")


def write_image(path, image: np.ndarray) -> None:
    """Write an RGB array to `path`; PNG when the suffix is .png, else P6."""
    if str(path).lower().endswith(".png"):
        _encode_png(path, _check_image(image))
        return
    with open(path, "wb") as fh:
        fh.write(encode_ppm(image))


def _decode_png(data: bytes) -> np.ndarray:
    try:
        from PIL import Image
    except ImportError:
        raise DecodeError(0, "PNG support requires Pillow (pip install multiq[png])") from None
    import io

    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8).copy()


def _encode_png(path, image: np.ndarray) -> None:
    try:
        from PIL import Image
    except ImportError:
        raise DecodeError(0, "PNG support requires Pillow (pip install multiq[png])") from None
    Image.fromarray(image, mode="RGB").save(path, format="PNG")


@dataclass
class BlockGrid:
    """Floor tiling of an image into block_size x block_size pixel blocks.

    Residual right/bottom strips that do not fill a whole block are not
    covered. `labels` is an optional row-major list of per-block class
    labels, filled in by classification.
    """

    image: np.ndarray
    block_size: int
    rows: int
    cols: int
    labels: list | None = field(default=None)

    def __len__(self) -> int:
        return self.rows * self.cols

    def block(self, r: int, c: int) -> np.ndarray:
        """View of block (r, c); row r covers pixel rows [r*bs, (r+1)*bs)."""
        bs = self.block_size
        return self.image[r * bs:(r + 1) * bs, c * bs:(c + 1) * bs]

    def blocks(self):
        """Iterate blocks in row-major order."""
        for r in range(self.rows):
            for c in range(self.cols):
                yield self.block(r, c)


def partition_blocks(image: np.ndarray, block_size: int = DEFAULT_BLOCK_SIZE) -> BlockGrid:
    """Tile `image` into blocks from the top-left corner, discarding strips.

    Raises ValueError when the image is smaller than a single block.
    """
    arr = _check_image(image)
    if block_size < 1:
        raise ValueError(f"block size must be positive, got {block_size}")
    h, w = arr.shape[:2]
    rows, cols = h // block_size, w // block_size
    if rows == 0 or cols == 0:
        raise ValueError(
            f"image of {w}x{h} pixels is smaller than one {block_size}x{block_size} block"
        )
    return BlockGrid(image=arr, block_size=block_size, rows=rows, cols=cols)


def channel_histogram(block: np.ndarray, channel: int) -> np.ndarray:
    """256-bin intensity histogram of one color channel of a pixel block.

    `channel` is 1 (red), 2 (green) or 3 (blue); the counts sum to the
    number of pixels in the block.
    """
    if channel not in (1, 2, 3):
        raise ValueError(f"channel must be 1 (red), 2 (green) or 3 (blue), got {channel!r}")
    arr = _check_image(block)
    return np.bincount(arr[:, :, channel - 1].ravel(), minlength=BINS).astype(np.int64)


def block_histograms(block: np.ndarray) -> np.ndarray:
    """All three channel histograms of a block as a (3, 256) array."""
    arr = _check_image(block)
    return np.stack([
        np.bincount(arr[:, :, k].ravel(), minlength=BINS).astype(np.int64)
        for k in range(3)
    ])


def render_overlay(image: np.ndarray, grid: BlockGrid, palette=None, alpha: float = 0.5) -> np.ndarray:
    """Tint each labeled block with its palette color.

    Output pixel = round(alpha * color + (1 - alpha) * original) per channel
    with round-half-up; alpha = 1 gives solid fill, alpha = 0 returns the
    input unchanged. Pixels in residual strips outside the grid stay
    untouched.
    """
    arr = _check_image(image)
    if palette is None:
        palette = DEFAULT_PALETTE
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if grid.labels is None or len(grid.labels) != len(grid):
        raise ValueError("grid must carry one label per block")
    if grid.image.shape != arr.shape:
        raise ValueError("grid was not derived from this image (shape mismatch)")
    out = arr.copy()
    bs = grid.block_size
    for r in range(grid.rows):
        for c in range(grid.cols):
            label = grid.labels[r * grid.cols + c]
            if label not in palette:
                raise ValueError(f"no palette color for label {label!r}")
            color = np.asarray(palette[label], dtype=np.float64)
            region = out[r * bs:(r + 1) * bs, c * bs:(c + 1) * bs].astype(np.float64)
            blended = np.floor(alpha * color + (1.0 - alpha) * region + 0.5)
            out[r * bs:(r + 1) * bs, c * bs:(c + 1) * bs] = blended.astype(np.uint8)
    return out
