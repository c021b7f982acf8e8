"""Service client used by the CLI.

Without a base URL the service app runs in-process behind the same HTTP
interface, so the CLI works with no server running; with --url it talks to
a remote instance.
"""

from __future__ import annotations

from typing import Optional

import httpx


def make_client(base_url: Optional[str] = None):
    if base_url:
        return httpx.Client(base_url=base_url, timeout=600.0)
    from fastapi.testclient import TestClient

    from .service import create_app

    return TestClient(create_app())
