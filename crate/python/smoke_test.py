"""Smoke test for the permfsk extension module.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/permfsk-*.whl
"""

import json
import math

import permfsk


def main():
    assert permfsk.cardinality_bound(4, 3) == 12
    assert permfsk.cardinality_bound(5, 4) == 20
    assert permfsk.cardinality_bound(20, 2) == math.factorial(20)
    assert permfsk.hamming_distance([1, 2, 3, 4], [2, 1, 3, 4]) == 2

    rep = permfsk.search_max_code(5, 3)
    assert rep.proven_optimal and rep.size == 60, rep
    assert rep.code.d_min == 3 and len(rep.code) == 60

    code = permfsk.CodeBook.canned("table1")
    assert len(code) == 12 and code.d_min == 3
    tx = code.encode(0)
    frame = permfsk.apply_scenario(tx, json.dumps({"jammed_tones": [1], "deletions": [[2, tx[1]]]}))
    dec = code.decode(frame)
    assert dec.kind == "unique" and dec.message == 0, dec

    again = permfsk.CodeBook.from_text(code.to_text())
    assert again.words == code.words

    p = permfsk.modem_params(4, 4800.0, 4)
    assert abs(p["bandwidth"] - 38400.0) < 1e-6
    assert abs(permfsk.snr_lower_bound_db(38.4) - 26.7967) < 1e-3

    rows = permfsk.simulate(permfsk.CodeBook.canned("example4"), [10.0], 20000, seed=7)
    again = permfsk.simulate(permfsk.CodeBook.canned("example4"), [10.0], 20000, seed=7)
    assert rows == again
    r = rows[0]
    assert 0.5 * r["approx_rate"] < r["combined_rate"] < 2.0 * r["approx_rate"], r

    rad = permfsk.verify_correction_radius(permfsk.CodeBook.canned("example4"), 3)
    assert rad["failures"] == 0 and rad["cases"] > 0

    try:
        permfsk.cardinality_bound(3, 5)
    except ValueError:
        pass
    else:
        raise AssertionError("d > M accepted")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
