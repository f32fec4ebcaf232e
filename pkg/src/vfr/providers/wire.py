"""HTTP providers speaking the chat-completions and embed wire protocols.

Transient failures (transport errors and 5xx statuses) are retried up to
retry_max total attempts with exponential backoff (backoff * 2^attempt
seconds after attempt 0, 1, ...). 4xx statuses and malformed response
bodies fail immediately. Embedding floats arrive as 32-bit values on the
wire and are widened to float64 before any arithmetic.
"""

from __future__ import annotations

import base64
import logging
import threading
import time
from typing import Any, Callable

import numpy as np
import requests

from ..errors import DimensionMismatch, EmptyCompletion, TransportError
from ..images import ImageRef
from ..vectors import EmbeddingVector
from .base import AugmentationParams, ChatMessage, ProviderFingerprint

log = logging.getLogger(__name__)

DEFAULT_RETRY_MAX = 3
DEFAULT_BACKOFF = 0.5
DEFAULT_TIMEOUT = 30.0

CHAT_PATH = "/v1/chat/completions"
EMBED_PATH = "/v1/embed"


def post_json_with_retry(
    url: str,
    payload: dict,
    api_key: str | None = None,
    timeout: float = DEFAULT_TIMEOUT,
    retry_max: int = DEFAULT_RETRY_MAX,
    backoff: float = DEFAULT_BACKOFF,
    sleep: Callable[[float], None] = time.sleep,
) -> dict:
    """POST payload as JSON and return the decoded response body.

    Retries only transport failures and 5xx statuses; a 4xx status or an
    unparseable body raises TransportError without another attempt.
    """
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    last_error: str = "no attempts made"
    for attempt in range(retry_max):
        try:
            resp = requests.post(url, json=payload, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            last_error = f"transport failure: {exc}"
            log.warning("POST %s attempt %d/%d failed: %s", url, attempt + 1, retry_max, exc)
        else:
            if 400 <= resp.status_code < 500:
                raise TransportError(
                    f"POST {url} returned client error {resp.status_code}",
                    status=resp.status_code,
                    attempts=attempt + 1,
                )
            if resp.status_code >= 500:
                last_error = f"server error {resp.status_code}"
                log.warning("POST %s attempt %d/%d: status %d", url, attempt + 1,
                            retry_max, resp.status_code)
            else:
                try:
                    body = resp.json()
                except ValueError as exc:
                    raise TransportError(
                        f"POST {url} returned unparseable JSON: {exc}",
                        status=resp.status_code,
                        attempts=attempt + 1,
                    ) from exc
                if not isinstance(body, dict):
                    raise TransportError(
                        f"POST {url} returned non-object JSON",
                        status=resp.status_code,
                        attempts=attempt + 1,
                    )
                return body
        if attempt + 1 < retry_max:
            sleep(backoff * (2**attempt))
    raise TransportError(
        f"POST {url} failed after {retry_max} attempts: {last_error}",
        attempts=retry_max,
    )


class _WireCounter:
    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._calls = 0

    def _count_call(self) -> None:
        with self._lock:
            self._calls += 1

    @property
    def calls(self) -> int:
        return self._calls


def _extract_chat_content(body: dict, url: str) -> str:
    try:
        content = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise TransportError(f"POST {url} returned a malformed chat body: {exc}") from exc
    if not isinstance(content, str) or not content.strip():
        raise EmptyCompletion(f"chat endpoint {url} returned empty content")
    return content


class WireChatProvider(_WireCounter):
    """Chat completions over HTTP."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        retry_max: int = DEFAULT_RETRY_MAX,
        backoff: float = DEFAULT_BACKOFF,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__()
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.timeout = timeout
        self.retry_max = retry_max
        self.backoff = backoff
        self.sleep = sleep
        self.fingerprint = ProviderFingerprint(
            kind="chat", endpoint_id=self.base_url, model_id=model_id
        )

    def chat(self, messages: list[ChatMessage], temperature: float = 0.0) -> str:
        url = self.base_url + CHAT_PATH
        payload = {
            "model": self.model_id,
            "temperature": temperature,
            "messages": [{"role": m.role, "content": m.content} for m in messages],
        }
        self._count_call()
        body = post_json_with_retry(url, payload, self.api_key, self.timeout,
                                    self.retry_max, self.backoff, self.sleep)
        return _extract_chat_content(body, url)


class WireVqaProvider(_WireCounter):
    """VQA over the chat protocol: the question travels with an image part."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        retry_max: int = DEFAULT_RETRY_MAX,
        backoff: float = DEFAULT_BACKOFF,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__()
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.timeout = timeout
        self.retry_max = retry_max
        self.backoff = backoff
        self.sleep = sleep
        self.fingerprint = ProviderFingerprint(
            kind="vqa", endpoint_id=self.base_url, model_id=model_id
        )

    def vqa(self, image: ImageRef, question: str) -> str:
        url = self.base_url + CHAT_PATH
        image_b64 = base64.b64encode(image.read_bytes()).decode("ascii")
        payload = {
            "model": self.model_id,
            "temperature": 0.0,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": question},
                        {"type": "image", "image_b64": image_b64},
                    ],
                }
            ],
        }
        self._count_call()
        body = post_json_with_retry(url, payload, self.api_key, self.timeout,
                                    self.retry_max, self.backoff, self.sleep)
        return _extract_chat_content(body, url)


def _parse_embeddings(body: dict, url: str, expected_dim: int, expected_count: int) -> list[EmbeddingVector]:
    try:
        dim = int(body["dim"])
        rows: Any = body["embeddings"]
    except (KeyError, TypeError, ValueError) as exc:
        raise TransportError(f"POST {url} returned a malformed embed body: {exc}") from exc
    if dim != expected_dim:
        raise DimensionMismatch(f"embed endpoint {url} returned dim {dim}, expected {expected_dim}")
    if not isinstance(rows, list) or len(rows) != expected_count:
        raise TransportError(
            f"POST {url} returned {len(rows) if isinstance(rows, list) else 'non-list'} "
            f"embeddings, expected {expected_count}"
        )
    out = []
    for row in rows:
        arr = np.asarray(row, dtype=np.float32).astype(np.float64)
        if arr.ndim != 1 or arr.shape[0] != expected_dim:
            raise DimensionMismatch(
                f"embed endpoint {url} returned a row of dim {arr.shape}, expected {expected_dim}"
            )
        out.append(EmbeddingVector(arr))
    return out


class WireTextEmbedProvider(_WireCounter):
    """Batch text embeddings over HTTP; output order matches input order."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        dim: int,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        retry_max: int = DEFAULT_RETRY_MAX,
        backoff: float = DEFAULT_BACKOFF,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__()
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.dim = dim
        self.api_key = api_key
        self.timeout = timeout
        self.retry_max = retry_max
        self.backoff = backoff
        self.sleep = sleep
        self.fingerprint = ProviderFingerprint(
            kind="text_embed", endpoint_id=self.base_url, model_id=model_id, dim=dim
        )

    def embed_text(self, inputs: list[str]) -> list[EmbeddingVector]:
        if not inputs:
            return []
        url = self.base_url + EMBED_PATH
        payload = {"model": self.model_id, "modality": "text", "inputs": list(inputs)}
        self._count_call()
        body = post_json_with_retry(url, payload, self.api_key, self.timeout,
                                    self.retry_max, self.backoff, self.sleep)
        return _parse_embeddings(body, url, self.dim, len(inputs))


class WireImageEmbedProvider(_WireCounter):
    """Single-image embeddings over HTTP with provider-side augmentation."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        dim: int,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        retry_max: int = DEFAULT_RETRY_MAX,
        backoff: float = DEFAULT_BACKOFF,
        sleep: Callable[[float], None] = time.sleep,
    ):
        super().__init__()
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.dim = dim
        self.api_key = api_key
        self.timeout = timeout
        self.retry_max = retry_max
        self.backoff = backoff
        self.sleep = sleep
        self.fingerprint = ProviderFingerprint(
            kind="image_embed", endpoint_id=self.base_url, model_id=model_id, dim=dim
        )

    def embed_image(self, image: ImageRef, aug: AugmentationParams | None = None) -> EmbeddingVector:
        url = self.base_url + EMBED_PATH
        payload: dict = {
            "model": self.model_id,
            "modality": "image",
            "inputs": [],
            "image_b64": base64.b64encode(image.read_bytes()).decode("ascii"),
        }
        if aug is not None:
            payload["augmentation"] = {
                "crop": [float(c) for c in aug.crop],
                "hflip": bool(aug.horizontal_flip),
            }
        self._count_call()
        body = post_json_with_retry(url, payload, self.api_key, self.timeout,
                                    self.retry_max, self.backoff, self.sleep)
        return _parse_embeddings(body, url, self.dim, 1)[0]
