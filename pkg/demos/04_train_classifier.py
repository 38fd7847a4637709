"""Train the hierarchy classifier on a small fresh corpus.

Generates a few hundred labeled states at desk budgets, trains the
six-parameter aligned-ellipsoid model, and reports held-out accuracy
with the per-label confusion matrix.  For the full-size corpus shipped
with the repository, see data/desk_corpus.csv and the README.
"""

import tempfile
import time
from pathlib import Path

from steerhier import mlp
from steerhier.protocol import ProtocolConfig, generate_dataset, read_dataset


def main():
    tmp = Path(tempfile.mkdtemp())
    cfg = ProtocolConfig.desk(master_seed=17)
    print("labeling 400 random states (a couple of minutes on one core)...")
    t0 = time.time()
    stats = generate_dataset(400, cfg, tmp / "corpus.csv")
    print(f"histogram: {stats['histogram']}  ({time.time() - t0:.0f}s)")

    _, records = read_dataset(tmp / "corpus.csv")
    cfg_train = mlp.TrainConfig(epochs=200, learning_rate=0.02, seed=0)
    log = []
    model = mlp.train(records, "LutA6", cfg_train, hidden_sizes=(256, 128),
                      log=log)
    print(f"trained {len(log)} epochs, best validation accuracy "
          f"{max(acc for _, acc in log):.3f}")

    _, _, test = mlp.split_masks([r.seed for r in records])
    held_out = [r for r, t in zip(records, test) if t]
    report = mlp.evaluate(model, held_out)
    print(f"\nheld-out accuracy {report.overall_accuracy:.3f} "
          f"on {report.confusion.sum()} states")
    print("confusion matrix (rows = true label):")
    header = "      " + " ".join(f"{lab:>5s}" for lab in mlp.CLASS_LABELS)
    print(header)
    for lab, row in zip(mlp.CLASS_LABELS, report.confusion):
        print(f"{lab:>5s} " + " ".join(f"{v:5d}" for v in row))


if __name__ == "__main__":
    main()
