pytest_plugins = [
    "tests.plugins.factories.bayesopt",
    "tests.plugins.factories.traces",
    "tests.plugins.instances.payloads",
]
