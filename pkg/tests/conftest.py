import numpy as np
import pytest


def random_spd(rng, p, cond=50.0):
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    w = np.exp(rng.uniform(0.0, np.log(cond), size=p))
    S = (Q * w) @ Q.T
    return (S + S.T) / 2


def factor_data(rng, p, n, K=3, noise=1.0):
    X = rng.standard_normal((K, n)) + 0.1
    B = rng.normal(1.0, 0.5, size=(p, K))
    Y = B @ X + noise * rng.standard_normal((p, n))
    return X, B, Y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def write_ff_csv(path, dates, names, rows, preamble=("This file was created from a test fixture.",)):
    lines = list(preamble) + ["", "," + ",".join(names)]
    for d, r in zip(dates, rows):
        lines.append(str(d) + "," + ",".join(f"{x:.4f}" for x in r))
    lines += ["", "Copyright fixture"]
    path.write_text("\n".join(lines) + "\n")
    return path


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
        terminalreporter.write_line(line)
