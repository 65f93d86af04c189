import pytest

from magdisk.model import (
    ConstantField,
    ConstantPotential,
    Disk,
    Numerics,
    Scenario,
    SpectralParams,
    ZeroPotential,
)


def make_scenario(field=None, potential=None, r0=1.0, epsilon=0.5, alpha=0.0, sigma=1.0, N=1000, **numerics):
    params = SpectralParams(epsilon, alpha, sigma)
    return Scenario(
        Disk(r0),
        field if field is not None else ConstantField(0.0),
        potential if potential is not None else ZeroPotential(),
        params,
        Numerics(N=N, **numerics),
    )


@pytest.fixture
def free_disk():
    return make_scenario(N=2000)


@pytest.fixture
def constant_field():
    return make_scenario(ConstantField(5.0), ConstantPotential(0.0), N=2000)


# acceptance criteria outcomes, printed in the terminal summary
ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    def record(number, ok, detail=""):
        ACCEPTANCE[number] = (bool(ok), detail)
        print(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
