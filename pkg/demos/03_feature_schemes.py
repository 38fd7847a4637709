"""The five feature encodings and their invariances.

Encodes one random state under every scheme, then shows what each
encoding is blind to: Alice's ellipsoid is unchanged by an invertible
filter on Bob, Bob's ellipsoid by a filter on Alice, and the aligned
six-parameter encoding by local unitaries on both sides.
"""

import numpy as np

from steerhier.features import SCHEMES, encode
from steerhier.qcore import (
    apply_local_unitaries,
    random_local_unitary,
    random_state,
)


def filtered(rho, k, side):
    op = np.kron(k, np.eye(2)) if side == "A" else np.kron(np.eye(2), k)
    out = op @ rho @ op.conj().T
    return out / np.trace(out).real


def main():
    rng = np.random.default_rng(7)
    rho = random_state(rng)

    print("feature vectors of one random state:")
    for scheme in SCHEMES:
        v = encode(rho, scheme).values
        print(f"  {scheme:10s} ({len(v):2d}) " + " ".join(f"{x:+.3f}" for x in v))

    k = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    k /= np.linalg.svd(k, compute_uv=False)[0]

    print("\ninvariance under an invertible filter on Bob (EllA9):")
    d = np.max(np.abs(encode(rho, "EllA9").values
                      - encode(filtered(rho, k, "B"), "EllA9").values))
    print(f"  max feature change {d:.2e}")

    print("invariance under an invertible filter on Alice (EllB9):")
    d = np.max(np.abs(encode(rho, "EllB9").values
                      - encode(filtered(rho, k, "A"), "EllB9").values))
    print(f"  max feature change {d:.2e}")

    print("invariance under local unitaries (LutA6):")
    rot = apply_local_unitaries(rho, random_local_unitary(rng),
                                random_local_unitary(rng))
    d = np.max(np.abs(encode(rho, "LutA6").values - encode(rot, "LutA6").values))
    print(f"  max feature change {d:.2e}")

    print("\nthe raw General15 encoding has none of these invariances:")
    d = np.max(np.abs(encode(rho, "General15").values
                      - encode(rot, "General15").values))
    print(f"  max feature change under the same rotation {d:.2e}")


if __name__ == "__main__":
    main()
