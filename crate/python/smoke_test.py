"""Smoke test for the designlab extension module.

Build and run from the repository root:

    cargo build --release -p designlab-py --features extension-module
    cp target/release/libdesignlab_py.so python/designlab.so
    python3 python/smoke_test.py

(or `maturin develop -m crates/python/Cargo.toml` and run the script).
"""

import math

import designlab as dl


def close(a, b, tol=1e-10):
    return abs(a - b) <= tol


def main():
    print("designlab", dl.__version__)

    # pairings
    diagrams = dl.enumerate_pairings(3)
    assert len(diagrams) == 15
    assert sum(p.is_permutation for p in diagrams) == 6
    cup_cap = dl.Pairing("2; (1,2)(3,4)")
    product, loops = cup_cap.compose(cup_cap)
    assert product == cup_cap and loops == 1
    assert dl.Pairing.from_pairs(2, [(1, 2), (3, 4)]) == cup_cap
    assert str(dl.Pairing.identity(2)) == "2; (1,3)(2,4)"

    # exact twirl of |0><0|^{⊗2} under SP(2) is the normalized symmetric projector
    d, t = 4, 2
    dim = d ** t
    x = [[0j] * dim for _ in range(dim)]
    x[0][0] = 1 + 0j
    tw = dl.twirl("sp", t, d, x)
    assert tw["basis_labels"][0] == "2; (1,3)(2,4)"
    assert close(tw["trace_out"].real, 1.0)
    sym = 1.0 / (d * (d + 1))
    assert close(tw["operator"][0][0].real, 2 * sym)

    u = dl.haar_sample("sp", 4, seed=1)
    gram = [[sum(u[k][i].conjugate() * u[k][j] for k in range(4)) for j in range(4)] for i in range(4)]
    assert all(close(gram[i][j], 1.0 if i == j else 0.0, 1e-12) for i in range(4) for j in range(4))

    report = dl.state_design_test("sp", 3, 4)
    assert report["verdict"] and report["distance"] <= 1e-10
    assert dl.lemma1_max_residual(3, 4) <= 1e-12

    gap = dl.mixed_state_gap(0.5, 4)
    assert gap["gap"] > 1e-3
    assert dl.mixed_state_gap(1.0, 4)["gap"] <= 1e-10

    rho = [[1 + 0j, 0j], [0j, 0j]]
    z = [[1 + 0j, 0j], [0j, -1 + 0j]]
    est = dl.shadow_estimate("sp", rho, z, 4000, seed=3)
    assert abs(est["mean"] - 1.0) <= 5 * est["stderr"]

    lam = dl.spectral_gap(3)["lambda"]
    assert close(lam, 0.16, 1e-8)
    ratio = dl.parameter_ratio(0.64, 0.6461)
    assert close(ratio, math.log(1 / 0.64) / math.log(1 / 0.6461) * 6 / 15, 1e-15)
    assert dl.design_depth(0.5, 0.5, 1) == 2

    try:
        dl.state_design_test("sp", 2, 5)
    except ValueError:
        pass
    else:
        raise AssertionError("odd dimension must be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
