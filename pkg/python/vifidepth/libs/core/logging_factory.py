"""Logging utilities and helpers for vifidepth.

The logging tree is configured once from ``data/log_config.yaml`` after
``${VAR}`` expansion. Console records go to stderr; stdout carries command
reports only.
"""

import functools
import inspect
import logging
import logging.config
import sys
import threading
import traceback
import types
from enum import IntEnum
from pathlib import Path
from typing import Any, Callable, Mapping, Optional, ParamSpec, TypeAlias, TypeVar, cast

import yaml

from vifidepth.libs.core.environment_variable_key import VifiDepthEnvironmentVariables
from vifidepth.libs.core.utility import Singleton, extract_environment_variables

_R = TypeVar("_R")
_P = ParamSpec("_P")
_logging_ArgsType: TypeAlias = tuple[object, ...] | Mapping[str, object]
_logging_SysExcInfoType: TypeAlias = (
    tuple[type[BaseException], BaseException, Optional[types.TracebackType]] | tuple[None, None, None]
)

PACKAGE_LOGGER_NAME = "vifidepth"


class LogLevel(IntEnum):
    """Logging level enumeration mapped to the standard ``logging`` module."""

    CRITICAL = logging.CRITICAL
    ERROR = logging.ERROR
    WARNING = logging.WARNING
    INFO = logging.INFO
    DEBUG = logging.DEBUG
    NOTSET = logging.NOTSET


class VifiDepthLogger(logging.getLoggerClass()):  # type: ignore[misc]
    """Custom logger class used throughout vifidepth.

    Subclasses the logger class returned by ``logging.getLoggerClass()`` so
    that a logger class installed earlier by other code is preserved.
    """

    def __init__(self, name: str, level: LogLevel = LogLevel.NOTSET) -> None:
        super().__init__(name, level)


class VifiDepthLoggerFactory(Singleton):
    """Singleton factory responsible for logger creation and configuration."""

    __lock = threading.Lock()
    __initialized = False

    @classmethod
    def get_logger(cls, name: Optional[str] = None) -> VifiDepthLogger:
        """Return a configured logger for the given name.

        If no name is provided, the caller's module name is inferred from the
        call stack.

        Args:
            name: Optional logger name.

        Returns:
            A ``VifiDepthLogger`` instance.
        """
        if not cls.__initialized:
            cls._initialize()

        if name is None:
            frame = inspect.stack()[1]
            caller = inspect.getmodule(frame[0])
            assert caller is not None
            name = caller.__name__

        assert name

        logger = logging.getLogger(name)
        return cast("VifiDepthLogger", logger)

    @classmethod
    def _build_config(cls, env: VifiDepthEnvironmentVariables) -> dict[str, Any]:
        """Load ``log_config.yaml`` and apply environment dependent handlers.

        Args:
            env: Environment accessor providing the log file location.

        Returns:
            A dictionary suitable for ``logging.config.dictConfig``.
        """
        config_path = Path(__file__).parent / "data" / "log_config.yaml"
        with open(config_path.as_posix(), "rt", encoding="utf-8") as file:
            data: Any = yaml.safe_load(file.read())
        data = extract_environment_variables(data)

        log_file = env.VIFIDEPTH_LOG_FILE
        if log_file is not None:
            log_file.parent.mkdir(parents=True, exist_ok=True)
            data["handlers"]["file"] = {
                "class": "logging.FileHandler",
                "level": "DEBUG",
                "formatter": "normal",
                "filename": log_file.as_posix(),
                "mode": "a",
                "encoding": "utf-8",
            }
            data["loggers"][PACKAGE_LOGGER_NAME]["handlers"].append("file")

        return cast("dict[str, Any]", data)

    @classmethod
    def _initialize(cls) -> None:
        """Initialize the logging system from the YAML configuration file."""
        with cls.__lock:
            if cls.__initialized:
                return
            logging.setLoggerClass(VifiDepthLogger)
            logging.config.dictConfig(cls._build_config(VifiDepthEnvironmentVariables()))
            cls.__initialized = True


def __make_record(
    logger: logging.Logger,
    level: LogLevel,
    frame_info: inspect.FrameInfo | traceback.FrameSummary,
    msg: object,
    args: _logging_ArgsType = (),
    exc_info: BaseException | None = None,
    extra: Mapping[str, object] | None = None,
) -> logging.LogRecord:
    """``LogRecord`` attributed to ``frame_info`` instead of the wrapper's own frame."""
    lno = frame_info.lineno or 0
    if isinstance(frame_info, inspect.FrameInfo):
        func = frame_info.function
    else:
        func = frame_info.name

    sys_exc_info: _logging_SysExcInfoType | None = None
    if exc_info is not None:
        sys_exc_info = (type(exc_info), exc_info, exc_info.__traceback__)

    return logger.makeRecord(
        name=logger.name,
        level=level,
        fn=frame_info.filename,
        lno=lno,
        msg=msg,
        args=args,
        exc_info=sys_exc_info,
        func=func,
        extra=extra,
    )


def VifiDepth_trace(
    debug_only: bool = False,
    output_error: bool = True,
) -> Callable[[Callable[_P, _R]], Callable[_P, _R]]:
    """Decorator factory that traces function entry, exit, and errors.

    The returned decorator logs entry and exit points of the wrapped callable
    at DEBUG level. When an exception occurs, an error record is emitted and
    the exception is re-raised.

    Args:
        debug_only: If ``True``, tracing is disabled when Python runs with
            ``-O``.
        output_error: Whether to attach exception information to error logs.

    Returns:
        A decorator that wraps a callable with tracing logic.
    """

    def __decorator(func: Callable[_P, _R]) -> Callable[_P, _R]:
        frame = inspect.stack()[1]
        caller_module = inspect.getmodule(frame[0])
        name = getattr(caller_module, "__name__", None)
        if not name:
            raise RuntimeError("Failed to get caller name.")

        logger = VifiDepthLoggerFactory.get_logger(name)

        @functools.wraps(func)
        def __wrapper(*args: _P.args, **kwargs: _P.kwargs) -> _R:
            if not __debug__ and debug_only:
                return func(*args, **kwargs)

            traced = logger.isEnabledFor(LogLevel.DEBUG)
            if traced:
                logger.handle(__make_record(logger, LogLevel.DEBUG, frame, f"{func.__name__}() - Enter"))
            try:
                ret = func(*args, **kwargs)
            except Exception as ex:
                tb = traceback.extract_tb(sys.exc_info()[2])
                frame_ = tb[-1] if tb else frame
                record = __make_record(
                    logger,
                    LogLevel.ERROR,
                    frame_,
                    f"{func.__name__}() - Leave with Error: {ex}",
                    exc_info=ex if output_error else None,
                )
                if logger.isEnabledFor(LogLevel.ERROR):
                    logger.handle(record)
                raise
            if traced:
                logger.handle(__make_record(logger, LogLevel.DEBUG, frame, f"{func.__name__}() - Leave"))
            return ret

        return __wrapper

    return __decorator
