"""Global pytest configuration.

This file registers the custom markers of the skewmech test suite.
"""


def pytest_configure(config):
    """Configure pytest with custom markers."""
    # Register custom markers to avoid warnings
    config.addinivalue_line("markers", "slow: marks tests as slow running")
    config.addinivalue_line("markers", "integration: marks tests that drive the CLI end to end")
    config.addinivalue_line("markers", "acceptance: marks tests that reproduce the worked mechanical examples")
