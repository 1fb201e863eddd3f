name = "vifidepth_dev"
version = "0.1.0"

requires = [
    "vifidepth-0.1.0",
]


def commands():
    env.VIFIDEPTH_LOCATION = "{env.VIFIDEPTH_LOCATION}"
    env.VIFIDEPTH_ENV = "dev"
    env.VIFIDEPTH_DEBUGGER_ENABLE = "1"
    env.VIFIDEPTH_HOST = "127.0.0.1"
    env.VIFIDEPTH_PORT = "6214"
    env.PIPELINE_LOG_LEVEL = "DEBUG"
    # env.VIFIDEPTH_DEBUGGER_WAIT = "1"
