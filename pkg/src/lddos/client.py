"""Client used by the CLI to reach the pipeline service.

By default the service runs in-process (no sockets, no extra process);
pass a base URL to talk to a remote instance instead."""

from __future__ import annotations

import httpx


def _in_process_client() -> httpx.Client:
    import warnings

    with warnings.catch_warnings():
        # the shim module warns on import; none of it concerns callers
        warnings.simplefilter("ignore")
        from fastapi.testclient import TestClient

    from .service.app import create_app

    return TestClient(create_app(), raise_server_exceptions=False)


class ServiceClient:
    def __init__(self, server: str | None = None):
        if server is None:
            self._client = _in_process_client()
        else:
            self._client = httpx.Client(base_url=server, timeout=None)

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> "ServiceClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def get(self, path: str) -> httpx.Response:
        return self._client.get(path)

    def post(self, path: str, body: dict) -> httpx.Response:
        return self._client.post(path, json=body)
