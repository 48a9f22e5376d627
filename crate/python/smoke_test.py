"""Smoke test for the rtabs extension module.

Build and install first:  maturin develop -m crates/python/Cargo.toml
"""

import pathlib

import rtabs

MODELS = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "models"


def main():
    single = (MODELS / "single_request.rtabs").read_text()
    assert rtabs.check(single) == []
    assert rtabs.check("{ Int x = y; }")

    res = rtabs.run(single, "100")
    assert (res.clock, res.stop, res.completed, res.misses) == ("17", "terminated", 2, 0)
    golden = (MODELS / "single_request.golden.csv").read_text()
    assert res.trace == golden

    photo_video = (MODELS / "photo_video.rtabs").read_text()
    counts = {}
    for policy in ("fifo", "edf", "sjf"):
        src = photo_video.replace("[Scheduler: sjf(queue)]", f"[Scheduler: {policy}(queue)]")
        counts[policy] = rtabs.run(src, "600").misses
    assert counts["sjf"] <= counts["edf"] and counts["sjf"] <= counts["fifo"], counts

    series = rtabs.miss_series(rtabs.run(photo_video, "600").trace, by_method=True)
    header, *rows = series.splitlines()
    assert header == "time,pid,completed,misses,request[Photo],request[Video],run"
    assert rows[-1].split(",")[3] == str(counts["sjf"])

    structured = rtabs.run(photo_video, "600", format="structured").trace
    assert rtabs.miss_series(structured, format="structured", by_method=True) == series

    deadlock = rtabs.run((MODELS / "deadlock.rtabs").read_text(), "100")
    assert deadlock.stop == "deadlock" and deadlock.blocked

    try:
        rtabs.run("{ Int x = y; }", "10")
    except rtabs.ModelError:
        pass
    else:
        raise AssertionError("expected ModelError")

    print("misses", counts)
    print("smoke test passed")


if __name__ == "__main__":
    main()
