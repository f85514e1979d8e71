# Utils/Logger/logfire.py
# Single place where logfire gets configured. Everything else just does
#   from Utils.Logger.logfire import logfire

import os
import threading

import logfire
from dotenv import load_dotenv

__all__ = ["logfire", "configure_logfire"]

_lock = threading.Lock()
_configured = False


def _env_flag(name: str, default: bool) -> bool:
    value = os.getenv(name)
    if value is None:
        return default
    return value.strip().lower() in {"1", "true", "yes", "on"}


def configure_logfire(*, send: bool | None = None, console: bool | None = None) -> None:
    """Configure logfire once per process.

    Reads LOGFIRE_SEND, LOGFIRE_CONSOLE, ENVIRONMENT and LOGFIRE_SERVICE_NAME
    (a local .env is honoured). Explicit arguments win over the environment.
    Later calls are no-ops.
    """
    global _configured
    with _lock:
        if _configured:
            return
        load_dotenv()
        send_to_logfire = _env_flag("LOGFIRE_SEND", False) if send is None else send
        show_console = _env_flag("LOGFIRE_CONSOLE", True) if console is None else console
        logfire.configure(
            send_to_logfire=send_to_logfire,
            service_name=os.getenv("LOGFIRE_SERVICE_NAME", "pose-relation-sandbox"),
            environment=os.getenv("ENVIRONMENT", "development"),
            console=None if show_console else False,
        )
        _configured = True
