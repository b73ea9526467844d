pytest_plugins = ["hypothesis.extra.pytestplugin"]
