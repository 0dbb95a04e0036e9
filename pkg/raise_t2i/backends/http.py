"""
HTTP Backends

JSON-over-HTTP clients for the real model services. Field names are the
normative wire format documented in docs/backend-protocol.md:

    generator  POST {prompt, seed, steps, width, height[, model]}          -> PNG bytes
    editor     POST {instruction, seed, steps, image: base64 PNG[, model]} -> PNG bytes
    scorer     POST {prompt, image: base64 PNG}                            -> {"score": float}
    grounding  POST {image: base64 PNG}                -> {caption, width, height, regions}
    chat       POST OpenAI chat-completions payload    -> choices[0].message.content

Transport retries (connection errors, 429 and 5xx) are handled by a urllib3
Retry policy mounted on one requests Session per backend; everything that
still fails is raised as TransportError.

Author: Vladimir K.S.
"""

import base64
import logging
from typing import Any, Optional

import requests
from requests.adapters import HTTPAdapter
from urllib3.util.retry import Retry

from ..config import BackendSettings
from ..errors import TransportError

logger = logging.getLogger(__name__)

RETRY_STATUSES = (429, 500, 502, 503, 504)


def make_session(retries: int) -> requests.Session:
    """Session whose POSTs are retried ``retries`` times with exponential backoff."""
    policy = Retry(
        total=retries,
        backoff_factor=0.5,
        status_forcelist=RETRY_STATUSES,
        allowed_methods=frozenset({"POST"}),
        raise_on_status=False,
    )
    session = requests.Session()
    adapter = HTTPAdapter(max_retries=policy)
    session.mount("http://", adapter)
    session.mount("https://", adapter)
    return session


def b64(data: bytes) -> str:
    return base64.b64encode(data).decode("ascii")


class HttpBackend:
    """Common POST plumbing; subclasses name their endpoint."""

    name = "backend"

    def __init__(
        self,
        url: Optional[str],
        settings: BackendSettings,
        session: Optional[requests.Session] = None,
    ) -> None:
        self.url = url
        self.timeout = settings.timeout_s
        self.session = session or make_session(settings.retries)

    def _post(self, body: dict[str, Any]) -> requests.Response:
        if not self.url:
            raise TransportError(f"no endpoint configured for the {self.name} backend")
        try:
            response = self.session.post(self.url, json=body, timeout=self.timeout)
            response.raise_for_status()
        except requests.RequestException as e:
            logger.debug("%s request to %s failed: %s", self.name, self.url, e)
            raise TransportError(f"{self.name} backend at {self.url} failed: {e}") from e
        return response

    def _post_json(self, body: dict[str, Any]) -> Any:
        response = self._post(body)
        try:
            return response.json()
        except ValueError as e:
            raise TransportError(f"{self.name} backend returned invalid JSON: {e}") from e


class HttpGenerator(HttpBackend):
    name = "generator"

    def __init__(self, settings: BackendSettings, session: Optional[requests.Session] = None):
        super().__init__(settings.generator_url, settings, session)
        self.model = settings.generator_model

    def generate(self, prompt: str, seed: int, *, steps: int, width: int, height: int) -> bytes:
        body: dict[str, Any] = {
            "prompt": prompt,
            "seed": seed,
            "steps": steps,
            "width": width,
            "height": height,
        }
        if self.model:
            body["model"] = self.model
        return self._post(body).content


class HttpEditor(HttpBackend):
    name = "editor"

    def __init__(self, settings: BackendSettings, session: Optional[requests.Session] = None):
        super().__init__(settings.editor_url, settings, session)
        self.model = settings.editor_model

    def edit(self, instruction: str, seed: int, reference: bytes, *, steps: int) -> bytes:
        body: dict[str, Any] = {
            "instruction": instruction,
            "seed": seed,
            "steps": steps,
            "image": b64(reference),
        }
        if self.model:
            body["model"] = self.model
        return self._post(body).content


class HttpScorer(HttpBackend):
    name = "scorer"

    def __init__(self, settings: BackendSettings, session: Optional[requests.Session] = None):
        super().__init__(settings.scorer_url, settings, session)

    def score(self, image: bytes, prompt: str) -> float:
        data = self._post_json({"prompt": prompt, "image": b64(image)})
        try:
            return float(data["score"])
        except (KeyError, TypeError, ValueError) as e:
            raise TransportError(f"scorer reply carries no numeric 'score': {data!r}") from e


class HttpGrounding(HttpBackend):
    name = "grounding"

    def __init__(self, settings: BackendSettings, session: Optional[requests.Session] = None):
        super().__init__(settings.grounding_url, settings, session)

    def ground(self, image: bytes) -> dict[str, Any]:
        data = self._post_json({"image": b64(image)})
        if not isinstance(data, dict):
            raise TransportError("grounding reply is not a JSON object")
        return data


class HttpChat(HttpBackend):
    name = "chat"

    def __init__(self, settings: BackendSettings, session: Optional[requests.Session] = None):
        super().__init__(settings.agent_url, settings, session)

    def complete(self, payload: dict[str, Any]) -> str:
        data = self._post_json(payload)
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as e:
            raise TransportError("chat reply has no choices[0].message.content") from e
        if not isinstance(content, str):
            raise TransportError("chat reply content is not text")
        return content
