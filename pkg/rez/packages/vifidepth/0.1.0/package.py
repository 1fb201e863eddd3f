name = "vifidepth"
version = "0.1.0"


def commands():
    env.PYTHONPATH.append("{env.VIFIDEPTH_LOCATION}python")
