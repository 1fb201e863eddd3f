"""Optional debugpy attachment for development sessions.

The command-line entry point calls :func:`attach_debugger_if_enabled` before
dispatching a subcommand. Nothing happens unless ``VIFIDEPTH_ENV=dev`` and
``VIFIDEPTH_DEBUGGER_ENABLE`` is truthy.
"""

from __future__ import annotations

import threading
from typing import Optional

import debugpy

from vifidepth.libs.core.environment_variable_key import VifiDepthEnvironmentVariables
from vifidepth.libs.core.logging_factory import VifiDepthLoggerFactory

logger = VifiDepthLoggerFactory.get_logger(__name__)

_lock = threading.Lock()
_listening = False


def attach_debugger_if_enabled(env: Optional[VifiDepthEnvironmentVariables] = None) -> bool:
    """Start a debugpy listener when the dev debugger is enabled.

    Args:
        env: Environment accessor. A fresh one is created when omitted.

    Returns:
        ``True`` if a listener is active after the call, otherwise ``False``.
    """
    global _listening
    env = env if env is not None else VifiDepthEnvironmentVariables()
    if not env.VIFIDEPTH_DEBUGGER_ENABLE:
        logger.debug("VIFIDEPTH_DEBUGGER_ENABLE is False")
        return False

    with _lock:
        if _listening:
            return True
        debugpy.listen((env.VIFIDEPTH_HOST, env.VIFIDEPTH_PORT))
        _listening = True
        logger.info("debugpy listening on %s:%d", env.VIFIDEPTH_HOST, env.VIFIDEPTH_PORT)

    if env.VIFIDEPTH_DEBUGGER_WAIT:
        logger.info("Waiting for debugger client")
        debugpy.wait_for_client()
    return True
