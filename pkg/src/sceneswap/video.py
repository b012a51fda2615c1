"""Core video containers and frame-sequence I/O.

A video clip is an (F, H, W, 3) float32 array with values nominally in
[0, 1]; intermediate pipeline stages may legitimately overshoot that range,
so clamping happens only when frames are written to disk. Mask clips are
(F, H, W) float32 arrays clamped to [0, 1] at construction.

On-disk representation is a ``manifest.json`` plus one file per frame in
one of three formats:

* ``raster8``  -- 8-bit PNG, quantized with round(v * 255)
* ``raster16`` -- 16-bit binary PPM (P6, maxval 65535, big-endian samples)
* ``raw32``    -- bit-exact float32 dump (magic ``RPA1``, LE u32 H/W/C,
                  then H*W*C LE float32, row-major, channel-interleaved)
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

RAW32_MAGIC = b"RPA1"

FORMATS = ("raster8", "raster16", "raw32")

_FORMAT_EXT = {"raster8": ".png", "raster16": ".ppm", "raw32": ".raw"}


class ClipIOError(Exception):
    """Raised for malformed manifests, missing frames, or bad pixel data."""


@dataclass(frozen=True)
class VideoClip:
    """Immutable dense frame sequence, (F, H, W, 3) float32."""

    frames: np.ndarray
    fps: float = 12.0

    def __post_init__(self):
        arr = np.ascontiguousarray(self.frames, dtype=np.float32)
        if arr is self.frames:
            arr = arr.copy()
        if arr.ndim != 4:
            raise ValueError(f"frames must be 4-D (F,H,W,C), got shape {arr.shape}")
        f, h, w, c = arr.shape
        if f < 1:
            raise ValueError("clip needs at least one frame")
        if h < 8 or w < 8:
            raise ValueError(f"frames must be at least 8x8, got {h}x{w}")
        if c != 3:
            raise ValueError(f"clip must have 3 channels, got {c}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("clip contains non-finite values")
        arr.setflags(write=False)
        object.__setattr__(self, "frames", arr)

    @property
    def shape(self) -> tuple[int, int, int, int]:
        return self.frames.shape

    def with_frames(self, frames: np.ndarray) -> "VideoClip":
        return VideoClip(frames, fps=self.fps)


@dataclass(frozen=True)
class MaskClip:
    """Per-frame soft masks, (F, H, W) float32 clamped to [0, 1]."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float32)
        if arr.ndim != 3:
            raise ValueError(f"mask must be 3-D (F,H,W), got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("mask contains non-finite values")
        arr = np.clip(arr, 0.0, 1.0)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.values.shape

    def matches(self, clip: VideoClip) -> bool:
        return self.values.shape == clip.frames.shape[:3]


@dataclass
class ClipManifest:
    """Index of a saved clip: ordered frame files plus geometry metadata."""

    frames: list[str]
    width: int
    height: int
    count: int
    fps: float
    format: str
    directory: Path = field(default_factory=Path)

    def to_json(self) -> dict:
        return {
            "frames": self.frames,
            "width": self.width,
            "height": self.height,
            "count": self.count,
            "fps": self.fps,
            "format": self.format,
        }


def _write_raw32(path: Path, frame: np.ndarray) -> None:
    h, w, c = frame.shape
    payload = np.ascontiguousarray(frame, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(RAW32_MAGIC)
        fh.write(struct.pack("<III", h, w, c))
        fh.write(payload)


def _read_raw32(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if len(data) < 16 or data[:4] != RAW32_MAGIC:
        raise ClipIOError(f"{path.name}: not a raw32 frame (bad magic)")
    h, w, c = struct.unpack("<III", data[4:16])
    expect = 16 + h * w * c * 4
    if len(data) != expect:
        raise ClipIOError(f"{path.name}: raw32 payload size mismatch")
    return np.frombuffer(data[16:], dtype="<f4").reshape(h, w, c).astype(np.float32)


def _write_ppm16(path: Path, frame_u16: np.ndarray) -> None:
    h, w, _ = frame_u16.shape
    header = f"P6\n{w} {h}\n65535\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(frame_u16.astype(">u2").tobytes())


def _read_ppm16(path: Path) -> np.ndarray:
    data = path.read_bytes()
    # header: magic, width, height, maxval separated by single whitespace
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if fields[0] != b"P6":
        raise ClipIOError(f"{path.name}: unsupported PNM magic {fields[0]!r}")
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 65535:
        raise ClipIOError(f"{path.name}: expected 16-bit PPM, maxval={maxval}")
    raw = np.frombuffer(data[pos : pos + h * w * 3 * 2], dtype=">u2")
    if raw.size != h * w * 3:
        raise ClipIOError(f"{path.name}: truncated PPM payload")
    return (raw.reshape(h, w, 3).astype(np.float32)) / 65535.0


def _read_raster(path: Path) -> np.ndarray:
    try:
        img = Image.open(path)
        img.load()
    except OSError as exc:
        raise ClipIOError(f"{path.name}: cannot decode image ({exc})") from exc
    if img.mode in ("I;16", "I"):
        arr = np.asarray(img, dtype=np.float32) / 65535.0
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif img.mode == "L":
        arr = np.asarray(img, dtype=np.float32) / 255.0
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    elif img.mode in ("RGB", "RGBA"):
        arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    else:
        raise ClipIOError(f"{path.name}: unsupported pixel format {img.mode!r}")
    return arr


def _read_frame(path: Path) -> np.ndarray:
    if not path.exists():
        raise ClipIOError(f"missing frame file: {path.name}")
    suffix = path.suffix.lower()
    if suffix == ".raw":
        return _read_raw32(path)
    if suffix in (".ppm", ".pnm"):
        return _read_ppm16(path)
    return _read_raster(path)


def load_manifest(manifest_path: str | Path) -> ClipManifest:
    manifest_path = Path(manifest_path)
    if not manifest_path.exists():
        raise ClipIOError(f"manifest not found: {manifest_path}")
    doc = json.loads(manifest_path.read_text())
    try:
        man = ClipManifest(
            frames=list(doc["frames"]),
            width=int(doc["width"]),
            height=int(doc["height"]),
            count=int(doc["count"]),
            fps=float(doc["fps"]),
            format=str(doc["format"]),
            directory=manifest_path.parent,
        )
    except KeyError as exc:
        raise ClipIOError(f"{manifest_path}: manifest missing key {exc}") from exc
    if man.count != len(man.frames):
        raise ClipIOError(f"{manifest_path}: count {man.count} != {len(man.frames)} frames")
    return man


def load_clip(manifest_path: str | Path) -> VideoClip:
    """Load a clip from its manifest; values are scaled to [0, 1]."""
    man = load_manifest(manifest_path)
    frames = []
    for name in man.frames:
        arr = _read_frame(man.directory / name)
        if arr.shape[:2] != (man.height, man.width):
            raise ClipIOError(
                f"{name}: frame is {arr.shape[1]}x{arr.shape[0]}, "
                f"manifest says {man.width}x{man.height}"
            )
        frames.append(arr)
    return VideoClip(np.stack(frames, axis=0), fps=man.fps)


def save_clip(
    clip: VideoClip,
    out_dir: str | Path,
    format: str = "raw32",
    stem: str = "frame",
) -> ClipManifest:
    """Write one file per frame plus ``manifest.json`` into ``out_dir``."""
    if format not in FORMATS:
        raise ValueError(f"unknown format {format!r}, expected one of {FORMATS}")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    f, h, w, _ = clip.shape
    ext = _FORMAT_EXT[format]
    names = [f"{stem}_{i:05d}{ext}" for i in range(f)]
    for i, name in enumerate(names):
        frame = clip.frames[i]
        path = out_dir / name
        if format == "raw32":
            _write_raw32(path, frame)
        elif format == "raster16":
            q = np.rint(np.clip(frame, 0.0, 1.0) * 65535.0).astype(np.uint16)
            _write_ppm16(path, q)
        else:
            q = np.rint(np.clip(frame, 0.0, 1.0) * 255.0).astype(np.uint8)
            Image.fromarray(q, mode="RGB").save(path)
    man = ClipManifest(
        frames=names, width=w, height=h, count=f, fps=clip.fps,
        format=format, directory=out_dir,
    )
    (out_dir / "manifest.json").write_text(json.dumps(man.to_json(), indent=2))
    return man


def load_mask_clip(manifest_path: str | Path) -> MaskClip:
    """Load a mask manifest; channels of each frame are averaged."""
    clip = load_clip(manifest_path)
    return MaskClip(clip.frames.mean(axis=3))


def save_mask_clip(
    mask: MaskClip, out_dir: str | Path, format: str = "raster8"
) -> ClipManifest:
    rgb = np.repeat(mask.values[..., None], 3, axis=3)
    return save_clip(VideoClip(rgb), out_dir, format=format, stem="mask")


def composite(fg: VideoClip, bg: VideoClip, mask: MaskClip) -> VideoClip:
    """Blend ``mask * fg + (1 - mask) * bg`` elementwise, per channel."""
    if fg.shape != bg.shape:
        raise ValueError(f"fg/bg shape mismatch: {fg.shape} vs {bg.shape}")
    if not mask.matches(fg):
        raise ValueError(f"mask shape {mask.shape} does not match clip {fg.shape}")
    m = mask.values[..., None]
    out = m * fg.frames + (1.0 - m) * bg.frames
    return VideoClip(out.astype(np.float32), fps=fg.fps)


def load_image(path: str | Path) -> np.ndarray:
    """Load a single raster image as an (H, W, 3) float32 array in [0, 1]."""
    return _read_frame(Path(path))
