import pytest

from necrosim.model import (IN_VITRO, IN_VIVO, IgnitionAffine, IgnitionConstant, Linear,
                            ModelParams, NumericsConfig, TwoLevel)


@pytest.fixture(scope="session")
def radial_params():
    """lam = 1, n_c = 0.25, c_thresh / c_B = 0.5, g_plus = g_minus = 1."""
    return ModelParams(1.0, IgnitionConstant(1.0, 1.0, 0.5), TwoLevel(1.0, 0.25))


@pytest.fixture(scope="session")
def fig3_params():
    return ModelParams(1.0, IgnitionAffine(2.0, 0.2, 1.2, 0.9), Linear(1.0))


@pytest.fixture(scope="session")
def invivo_params():
    return ModelParams(1.0, IgnitionAffine(2.0, 0.2, 1.2, 0.2), Linear(1.0), IN_VIVO)


@pytest.fixture(scope="session")
def invitro_tw_params():
    return ModelParams(1.0, IgnitionConstant(1.0, 1.0, 0.4), TwoLevel(1.0, 0.5), IN_VITRO)


@pytest.fixture(scope="session")
def numerics():
    return NumericsConfig()


_ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """Record (passed, detail) for an acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, checks, detail="", part=None):
        # parametrized parts of one criterion are merged into a single entry
        if part is not None:
            checks = {f"{part}: {k}": v for k, v in checks.items()}
            detail = f"{part}: {detail}" if detail else ""
            if number in store:
                _, old, old_detail = store[number]
                checks = {**old, **checks}
                detail = "; ".join(d for d in (old_detail, detail) if d)
        store[number] = (all(checks.values()), checks, detail)
        return all(checks.values())

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        ok, checks, detail = store[number]
        failed = [k for k, v in checks.items() if not v]
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f"  ({detail})"
        if failed:
            line += f"  failed checks: {', '.join(failed)}"
        terminalreporter.write_line(line)
