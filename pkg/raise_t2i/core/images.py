"""
Content-Addressed Image Store

Holds the bytes behind every ImageRef produced during a run. Execution
workers write concurrently; everything else reads. Dimensions are taken from
the PNG header only; pixels are never decoded.

Author: Vladimir K.S.
"""

import hashlib
import threading
from collections.abc import Iterator
from io import BytesIO
from typing import Protocol

from PIL import Image, UnidentifiedImageError

from ..errors import RaiseError
from .models import ImageRef


class ImageStoreError(RaiseError):
    """Raised when bytes are not an image or a reference does not resolve."""

    pass


def content_id(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def probe_image(data: bytes) -> tuple[int, int, str]:
    """
    Read (width, height, media_type) from an image header.

    Raises:
        ImageStoreError: If the bytes are not a recognizable image or exceed the pixel limit
    """
    try:
        with Image.open(BytesIO(data)) as image:
            width, height = image.size
            media_type = Image.MIME.get(image.format or "", "application/octet-stream")
    except Image.DecompressionBombError as e:
        raise ImageStoreError(f"backend returned an oversized image: {e}") from e
    except (UnidentifiedImageError, OSError, ValueError, SyntaxError) as e:
        raise ImageStoreError(f"backend returned bytes that are not an image: {e}") from e
    return width, height, media_type


class ImageStore(Protocol):
    def put(self, data: bytes) -> ImageRef: ...

    def get(self, ref: ImageRef) -> bytes: ...


class MemoryImageStore:
    """
    Thread-safe in-memory store keyed by sha256 of the bytes.

    Usage:
        store = MemoryImageStore()
        ref = store.put(png_bytes)
        assert store.get(ref) == png_bytes
    """

    def __init__(self) -> None:
        self._blobs: dict[str, bytes] = {}
        self._lock = threading.Lock()

    def put(self, data: bytes) -> ImageRef:
        width, height, media_type = probe_image(data)
        key = content_id(data)
        with self._lock:
            self._blobs.setdefault(key, data)
        return ImageRef(content_id=key, width=width, height=height, media_type=media_type)

    def get(self, ref: ImageRef) -> bytes:
        with self._lock:
            data = self._blobs.get(ref.content_id)
        if data is None:
            raise ImageStoreError(f"unknown image {ref.content_id}")
        return data

    def __contains__(self, ref: object) -> bool:
        return isinstance(ref, ImageRef) and ref.content_id in self._blobs

    def __iter__(self) -> Iterator[str]:
        with self._lock:
            return iter(list(self._blobs))

    def __len__(self) -> int:
        return len(self._blobs)
