from .app_environment_variables import AppEnvironmentVariables, EnvironmentVariableError

__all__ = ["AppEnvironmentVariables", "EnvironmentVariableError"]
