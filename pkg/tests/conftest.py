import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "ci",
    deadline=None,
    max_examples=60,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def small_periods():
    """A spread of short periods used across suites."""
    from sudler import PeriodSpec

    return [
        PeriodSpec((1,), 1),
        PeriodSpec((1, 2), 2),
        PeriodSpec((2, 3), 2),
        PeriodSpec((1, 1, 2), 3),
        PeriodSpec((1, 4), 2),
        PeriodSpec((3,), 1),
        PeriodSpec((2, 5), 2),
        PeriodSpec((1, 2, 3), 2),
        PeriodSpec((4, 1, 2, 3), 4),
    ]
