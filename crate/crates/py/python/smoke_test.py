"""Smoke test for the `ihards` extension module.

Build and install first, e.g.

    pip install maturin
    maturin build --release -m crates/py/Cargo.toml -o dist
    pip install dist/ihards-*.whl
    python crates/py/python/smoke_test.py
"""

import os
import sys
import tempfile

import ihards


def check(cond, what):
    if not cond:
        print(f"FAIL {what}")
        sys.exit(1)
    print(f"ok   {what}")


def main():
    data = ihards.Dataset.synthetic(per_class=60, sigma=0.5, seed=3)
    check((data.rows, data.cols) == (300, 571), "synthetic shape")
    check(data.class_counts() == [60] * 5, "balanced classes")

    train, test = data.split(seed=3)
    check(train.rows + test.rows == data.rows, "split partitions rows")

    mask = ihards.prune(data, threshold=0.9, seed=3)
    check(0 < mask.kept_count <= 571 and len(mask) == 571, "mask width")
    check(ihards.FeatureMask.parse(mask.to_text()).keep == mask.keep, "mask text round trip")
    check(mask.apply(data).cols == mask.kept_count, "mask apply")

    runs = ihards.train_eval(data, arch="arch5", mask=mask, epochs=4, batch_size=50, seed=3, repeats=2)
    check(len(runs) == 2 and runs[0].seed == 3, "two repeats, root seed first")
    check(runs[1].seed == ihards.repeat_seed(3, 1), "repeat seed derivation")
    run = runs[0]
    check(len(run.curve) == 4, "curve has one row per epoch")
    rep = run.report
    check(rep.micro["precision"] == rep.micro["recall"] == rep.micro["f1"] == rep.accuracy, "micro identity")
    check(sum(map(sum, rep.confusion)) == test.rows, "confusion total")

    ck = run.checkpoint
    again = ihards.Checkpoint.from_bytes(ck.to_bytes())
    check(again.to_bytes() == ck.to_bytes(), "checkpoint bytes round trip")
    check(ck.total_features == 571 and ck.input_features == mask.kept_count, "checkpoint widths")
    check(ck.evaluate(test).summary_text() == rep.summary_text(), "evaluate reproduces run report")
    preds = ck.predict(test)
    check(ihards.score(test.labels, preds).accuracy == rep.accuracy, "predict agrees with report")

    with tempfile.TemporaryDirectory() as d:
        p = os.path.join(d, "d.ihds")
        data.save(p)
        check(ihards.Dataset.load(p).features() == data.features(), "IHDS round trip")
        m = os.path.join(d, "model.ihck")
        ck.save(m)
        check(ihards.Checkpoint.load(m).to_bytes() == ck.to_bytes(), "checkpoint file round trip")

    try:
        ihards.train_eval(data, arch="arch9")
        check(False, "unknown arch raises")
    except ihards.ConfigError as e:
        check("arch5" in str(e), "unknown arch raises ConfigError listing names")
    try:
        ihards.Checkpoint.from_bytes(b"nope")
        check(False, "bad checkpoint raises")
    except ihards.DataError:
        check(True, "bad checkpoint raises DataError")
    check(issubclass(ihards.NumericError, ihards.IhardsError), "exception hierarchy")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
