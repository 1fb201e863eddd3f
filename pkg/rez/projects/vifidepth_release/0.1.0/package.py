name = "vifidepth_release"
version = "0.1.0"

requires = [
    "vifidepth-0.1.0",
]


def commands():
    env.VIFIDEPTH_LOCATION = "{env.VIFIDEPTH_LOCATION}"
    env.VIFIDEPTH_ENV = "release"
    env.PIPELINE_LOG_LEVEL = "INFO"
