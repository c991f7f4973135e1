"""Smoke test for the qtc extension module.

Build and install first:
    maturin build --release -m crates/py/Cargo.toml -o dist && pip install dist/qtc-*.whl
"""

import json
import math

import qtc


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    z = qtc.Operator([[1, 0], [0, -1]])
    mixed = qtc.State.maximally_mixed(1)
    close(qtc.tail_prob(z, mixed, 0.5), 1.0, 1e-12)
    general, commuting = qtc.gaussian_tail_bound(z, mixed, 0.5, 0.5)
    close(commuting, 2 * math.exp(-0.125), 1e-6)
    lo, hi = z.lipschitz()
    close(lo, 2.0, 1e-9)
    close(hi, 2.0, 1e-9)

    rho = qtc.State.random(2, seed=1)
    sigma = qtc.State.random(2, seed=2)
    cert = qtc.w1_distance(rho, sigma)
    assert cert["value_lower"] <= cert["value_upper"] + 1e-8
    diff = qtc.Operator([[a - b for a, b in zip(r, s)] for r, s in zip(rho.matrix(), sigma.matrix())])
    assert 0.5 * diff.trace_norm() <= cert["value_upper"] + 1e-6

    assert qtc.tci_dual_lower(mixed, 10, 1) >= 0.49

    h = qtc.Hamiltonian.ising_chain(3)
    omega = qtc.State.gibbs(h, 0.1)
    eta = qtc.eta_diamond(omega)
    assert 0 <= eta < 1
    c = qtc.tci_markov_bound(3, eta)
    up, lower, ok = qtc.verify_tci_empirical(omega, c, trials=5, seed=3)
    assert ok and lower <= up

    drop, pinsker = qtc.recoverability_gap(rho, qtc.State.gibbs(qtc.Hamiltonian.ising_chain(2), 0.5), [0], [1])
    assert drop >= pinsker - 1e-6

    close(qtc.beta_critical(2, 2, 1.0), 7.7515e-4, 1e-6)

    try:
        qtc.Operator([[0, 1], [0, 0]])
    except qtc.QtcError:
        pass
    else:
        raise AssertionError("non-Hermitian input accepted")

    text = json.dumps({"system": {"d": 2, "sites": [0, 1]}, "beta": 0.0, "tasks": ["w1"], "trials": 2, "seed": 5})
    report, csv, passed = qtc.run_config(text)
    assert passed and json.loads(report)["pass"]
    assert csv.count("\n") == 4
    assert json.loads(qtc.demo_config("ising-chain-3"))["system"]["d"] == 2
    print("smoke test passed")


if __name__ == "__main__":
    main()
