from . import generators, serialize, suites  # noqa: F401
