"""Language-model completion clients: a scripted mock and a live HTTP one."""

from __future__ import annotations

import json
import os
import threading
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Mapping, Optional, Union

from ..config import ClientConfig
from ..errors import BCError


class ClientError(BCError):
    pass


class MockScriptMissing(ClientError):
    pass


class Cancelled(ClientError):
    pass


class CompletionClient(ABC):
    """complete(prompt, settings) -> response text.

    ``settings`` always carries ``stage`` and ``attempt``; clients may use
    them (the mock does) or ignore them (the live client does).
    """

    def __init__(self) -> None:
        self._cancel = threading.Event()

    @abstractmethod
    def complete(self, prompt: str, settings: Mapping) -> str: ...

    def cancel(self) -> None:
        self._cancel.set()

    @property
    def cancelled(self) -> bool:
        return self._cancel.is_set()


class ScriptedClient(CompletionClient):
    """Replays canned responses keyed by (stage, attempt).

    A missing attempt falls back to the latest earlier attempt of the same
    stage, so a script that "never learns" needs only one file.
    """

    def __init__(self, scripts: Mapping[tuple, str]):
        super().__init__()
        self.scripts = dict(scripts)
        self.calls: list[tuple[str, int]] = []

    @classmethod
    def from_dir(cls, path: Union[str, Path]) -> "ScriptedClient":
        """Load ``<stage>-<attempt>.txt`` files from a directory."""
        scripts = {}
        for f in sorted(Path(path).glob("*-[0-9]*.txt")):
            stage, _, attempt = f.stem.rpartition("-")
            scripts[(stage, int(attempt))] = f.read_text(encoding="utf-8")
        if not scripts:
            raise MockScriptMissing(f"no <stage>-<attempt>.txt scripts in {path}")
        return cls(scripts)

    def complete(self, prompt: str, settings: Mapping) -> str:
        if self.cancelled:
            raise Cancelled("client cancelled")
        stage, attempt = settings["stage"], int(settings["attempt"])
        self.calls.append((stage, attempt))
        for a in range(attempt, 0, -1):
            if (stage, a) in self.scripts:
                return self.scripts[(stage, a)]
        raise MockScriptMissing(f"no scripted response for stage {stage!r}, attempt {attempt}")


class LiveClient(CompletionClient):
    """Chat-completions style HTTP endpoint; the key comes from an environment variable."""

    def __init__(self, cfg: Optional[ClientConfig] = None):
        super().__init__()
        self.cfg = cfg or ClientConfig()

    def _key(self) -> str:
        key = os.environ.get(self.cfg.api_key_env)
        if not key:
            raise ClientError(f"environment variable {self.cfg.api_key_env} is not set")
        return key

    def complete(self, prompt: str, settings: Mapping) -> str:
        body = json.dumps(
            {
                "model": self.cfg.model,
                "messages": [{"role": "user", "content": prompt}],
                "temperature": self.cfg.temperature,
                "max_completion_tokens": self.cfg.max_tokens,
            }
        ).encode("utf-8")
        req = urllib.request.Request(
            self.cfg.base_url,
            data=body,
            headers={"Content-Type": "application/json", "Authorization": f"Bearer {self._key()}"},
        )
        last: Optional[Exception] = None
        for attempt in range(self.cfg.retries + 1):
            if self.cancelled:
                raise Cancelled("client cancelled")
            try:
                with urllib.request.urlopen(req, timeout=self.cfg.timeout) as resp:
                    data = json.loads(resp.read().decode("utf-8"))
                return data["choices"][0]["message"]["content"]
            except (urllib.error.URLError, TimeoutError, KeyError, ValueError) as e:
                last = e
                if attempt < self.cfg.retries:
                    self._cancel.wait(min(2.0 ** attempt, 30.0))
        raise ClientError(f"completion failed after {self.cfg.retries + 1} attempts: {last}")


__all__ = ["CompletionClient", "ScriptedClient", "LiveClient", "ClientError", "MockScriptMissing", "Cancelled"]
