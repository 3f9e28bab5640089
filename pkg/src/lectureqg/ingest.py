"""Turn raw recordings into Lecture objects.

Keyframe extraction walks the frame stream, hashing one frame out of every
`skip_n + 1`, and saves a frame whenever its perceptual-hash distance to the
previously hashed frame exceeds `delta` (the first checked frame is always
saved). Frames are named by their integer timestamp in seconds.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Iterator, Optional

import numpy as np
from PIL import Image
from scipy.fft import dctn

from .corpus import Keyframe, Lecture, TranscriptSegment

logger = logging.getLogger(__name__)

HASH_BITS = 64


class IngestError(Exception):
    pass


class HashLengthMismatch(IngestError):
    """Two hash vectors of different lengths were compared."""


@dataclass
class KeyframeParams:
    fps: float = 30.0
    skip_n: int = 30
    delta: int = 5
    crop: Optional[tuple[int, int, int, int]] = None  # (x, y, w, h)


def perceptual_hash(image) -> list[int]:
    """64-bit DCT hash: 32x32 grayscale, 8x8 low-frequency block, bit = coef > median."""
    arr = _to_gray_array(image)
    if arr.size == 0:
        raise IngestError("empty image")
    small = np.asarray(
        Image.fromarray(arr.astype(np.float32)).resize((32, 32), Image.BILINEAR),
        dtype=np.float64,
    )
    coeffs = dctn(small, norm="ortho")[:8, :8].flatten()
    return [int(c > np.median(coeffs)) for c in coeffs]


def _to_gray_array(image) -> np.ndarray:
    # kept in float: quantizing here would break exact scale invariance
    if isinstance(image, np.ndarray):
        arr = image.astype(np.float64)
        if arr.ndim == 3:
            arr = arr.mean(axis=2)
        return arr
    if isinstance(image, Image.Image):
        return np.asarray(image.convert("L"), dtype=np.float64)
    if isinstance(image, (str, Path)):
        try:
            return np.asarray(Image.open(image).convert("L"), dtype=np.float64)
        except OSError as exc:
            raise IngestError(f"unreadable image {image}: {exc}") from exc
    raise IngestError(f"unsupported image type {type(image)!r}")


def hash_distance(h1, h2) -> int:
    """Sum of element-wise absolute differences; errors on length mismatch."""
    if len(h1) != len(h2):
        raise HashLengthMismatch(f"hash lengths differ: {len(h1)} vs {len(h2)}")
    return int(sum(abs(a - b) for a, b in zip(h1, h2)))


def _iter_frames_dir(frames_dir: Path) -> Iterator[np.ndarray]:
    paths = sorted(p for p in frames_dir.iterdir()
                   if p.suffix.lower() in {".png", ".jpg", ".jpeg"})
    if not paths:
        raise IngestError(f"no frames in {frames_dir}")
    for p in paths:
        yield np.asarray(Image.open(p).convert("L"))


def _iter_frames_video(video_path: Path) -> Iterator[np.ndarray]:
    import cv2

    cap = cv2.VideoCapture(str(video_path))
    if not cap.isOpened():
        raise IngestError(f"cannot decode video {video_path}")
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                break
            yield cv2.cvtColor(frame, cv2.COLOR_BGR2GRAY)
    finally:
        cap.release()


def iter_frames(source) -> Iterator[np.ndarray]:
    """Yield grayscale frames from a video file, frame directory, or iterable."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.is_dir():
            return _iter_frames_dir(path)
        return _iter_frames_video(path)
    return iter(source)


def extract_keyframes(
    source, params: KeyframeParams, output_dir: Optional[Path] = None
) -> list[Keyframe]:
    """Detect slide changes by perceptual-hash distance over the frame stream.

    One frame out of every `skip_n + 1` is hashed; the elapsed-frame counter
    advances by `skip_n + 1` per check so saved timestamps reflect real
    positions in the stream. The first checked frame is always saved.
    """
    if output_dir is not None:
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
    keyframes: list[Keyframe] = []
    prev_hash: Optional[list[int]] = None
    frame_count = 0
    used_names: set[str] = set()
    for frame in iter_frames(source):
        if frame_count % (params.skip_n + 1) != 0:
            frame_count += 1
            continue
        if params.crop is not None:
            x, y, w, h = params.crop
            frame = frame[y:y + h, x:x + w]
        current = perceptual_hash(frame)
        if prev_hash is None or hash_distance(current, prev_hash) > params.delta:
            second = int(frame_count // params.fps)
            name = f"{second}.png"
            if name in used_names:  # two changes within the same second
                name = f"{second}_{len(keyframes)}.png"
            used_names.add(name)
            image_ref = ""
            if output_dir is not None:
                image_ref = str(output_dir / name)
                Image.fromarray(frame.astype(np.uint8)).save(image_ref)
            keyframes.append(Keyframe(
                index=len(keyframes) + 1,
                timestamp_s=frame_count / params.fps,
                image_ref=image_ref,
                phash=current,
            ))
        prev_hash = current
        frame_count += 1
    if frame_count == 0:
        raise IngestError("source yielded zero frames")
    return keyframes


def align_keyframes(lecture: Lecture) -> dict[int, list[int]]:
    """Partition segments among keyframes by half-open timestamp intervals.

    Keyframe j owns segments starting in [t_j, t_{j+1}); the last keyframe
    owns the tail. With no keyframes the map is empty.
    """
    alignment: dict[int, list[int]] = {kf.index: [] for kf in lecture.keyframes}
    if not lecture.keyframes:
        return alignment
    boundaries = [kf.timestamp_s for kf in lecture.keyframes]
    for seg in lecture.segments:
        owner = lecture.keyframes[0].index
        for kf, ts in zip(lecture.keyframes, boundaries):
            if seg.start_s >= ts:
                owner = kf.index
            else:
                break
        alignment[owner].append(seg.index)
    return alignment


def _content_hash(image_ref: str) -> str:
    return hashlib.sha256(Path(image_ref).read_bytes()).hexdigest()


def caption_keyframes(
    lecture: Lecture,
    client,
    prompt: str = "Describe the content of this lecture slide in detail.",
    cache: Optional[dict[str, str]] = None,
) -> Lecture:
    """Fill in keyframe captions via a vision-capable model client.

    Captions are cached by image content hash. A failing frame is marked
    caption-failed and the rest of the lecture proceeds.
    """
    cache = cache if cache is not None else {}
    for kf in lecture.keyframes:
        if kf.caption:
            continue
        try:
            key = _content_hash(kf.image_ref)
        except OSError as exc:
            logger.warning("keyframe %s unreadable: %s", kf.index, exc)
            kf.caption_failed = True
            continue
        if key in cache:
            kf.caption = cache[key]
            continue
        try:
            exchange = client.complete(prompt, images=[kf.image_ref])
            kf.caption = exchange.response
            cache[key] = kf.caption
        except Exception as exc:
            logger.warning("captioning failed for keyframe %s: %s", kf.index, exc)
            kf.caption_failed = True
    return lecture


def restore_punctuation(
    segments: list[TranscriptSegment],
    restore: Callable[[str], str],
) -> list[TranscriptSegment]:
    """Run each segment through a punctuation-restoration endpoint.

    Segment boundaries are untouched; a failing call passes the original
    text through with a warning.
    """
    out = []
    for seg in segments:
        try:
            text = restore(seg.text)
        except Exception as exc:
            logger.warning("punctuation restoration failed for segment %s: %s",
                           seg.index, exc)
            text = seg.text
        out.append(TranscriptSegment(index=seg.index, start_s=seg.start_s,
                                     end_s=seg.end_s, text=text))
    return out
