"""Optional hosted-model adapters behind the same interfaces.

Configured entirely through environment variables; no test depends on
them and nothing here is imported unless a hosted backend is requested.

* ``VISAGENT_TEXT_API_URL`` / ``VISAGENT_TEXT_API_KEY`` / ``VISAGENT_TEXT_MODEL``
  point at a chat-completion style endpoint that returns JSON content.
"""

from __future__ import annotations

import json
import os
import time
from typing import Any

from ..errors import BackendError, SchemaError
from ..hashing import digest_obj
from .base import BackendDescriptor, Capability, TextModelBackend


class HostedChatTextBackend(TextModelBackend):
    """Chat-completion adapter; the reply must be a single JSON document."""

    def __init__(self, name: str = "hosted-text", timeout: float = 60.0) -> None:
        super().__init__()
        self.url = os.environ.get("VISAGENT_TEXT_API_URL", "")
        self.api_key = os.environ.get("VISAGENT_TEXT_API_KEY", "")
        self.model = os.environ.get("VISAGENT_TEXT_MODEL", "")
        self.timeout = timeout
        if not self.url or not self.model:
            raise BackendError(
                "hosted text backend needs VISAGENT_TEXT_API_URL and VISAGENT_TEXT_MODEL"
            )
        self.descriptor = BackendDescriptor(
            name=name,
            capability=Capability.TEXT,
            deterministic=False,
            concurrency_safe=True,
        )

    def complete(
        self, role: str, instruction: str, payload: dict[str, Any], retry_index: int = 0
    ) -> dict[str, Any]:
        import httpx

        started = time.monotonic()
        body = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": instruction},
                {"role": "user", "content": json.dumps(payload, ensure_ascii=False)},
            ],
            "response_format": {"type": "json_object"},
        }
        headers = {"Authorization": f"Bearer {self.api_key}"} if self.api_key else {}
        try:
            response = httpx.post(self.url, json=body, headers=headers, timeout=self.timeout)
            response.raise_for_status()
            content = response.json()["choices"][0]["message"]["content"]
        except Exception as exc:  # transport or shape failure
            raise BackendError(f"hosted text call failed: {exc}") from exc
        try:
            reply = json.loads(content)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"hosted reply is not JSON: {exc}") from exc
        self._record(role, digest_obj(payload), digest_obj(reply), started, retry_index)
        return reply


__all__ = ["HostedChatTextBackend"]
