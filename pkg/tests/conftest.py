import numpy as np
import pytest
from scipy import stats


def encode(D, n):
    return np.asarray(D) @ (n ** np.arange(n)[::-1])


def chisquare_pvalue(draws, space, probs):
    """Goodness of fit of sampled rows against exact point masses.

    Cells with expected count below 5 are pooled; zero-probability cells must
    stay empty.
    """
    n = space.shape[1]
    index = {c: j for j, c in enumerate(encode(space, n).tolist())}
    obs = np.bincount([index[c] for c in encode(draws, n).tolist()], minlength=len(space))
    exp = np.asarray(probs) * len(draws)
    assert obs[exp == 0].sum() == 0, "sampled a zero-probability point"
    keep = exp >= 5
    rest = (~keep) & (exp > 0)
    o, e = obs[keep], exp[keep]
    if rest.any():
        o, e = np.append(o, obs[rest].sum()), np.append(e, exp[rest].sum())
    return stats.chisquare(o, e).pvalue


def point_frequencies(draws, space):
    n = space.shape[1]
    index = {c: j for j, c in enumerate(encode(space, n).tolist())}
    obs = np.bincount([index[c] for c in encode(draws, n).tolist()], minlength=len(space))
    return obs / len(draws)


@pytest.fixture
def chisq():
    return chisquare_pvalue


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("[")[1].split("]")[0])):
            terminalreporter.write_line(line)
