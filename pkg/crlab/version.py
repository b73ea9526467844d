try:
    from importlib.metadata import version as _dist_version

    version = _dist_version("crlab")
except Exception:
    version = ""
