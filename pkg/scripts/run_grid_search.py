"""Grid search of analyzer parameters on raw features of a synthetic corpus.

    python scripts/run_grid_search.py --algo scluster --grid evec_smooth=3,5,9 --grid rec_smooth=1,3
"""

from __future__ import annotations

import argparse

from msaml.cli.synth import SynthConfig, synth_songs
from msaml.features import sync_to_grid
from msaml.msa.gridsearch import grid_search


def parse_grid(items):
    grids = {}
    for item in items:
        name, _, values = item.partition("=")
        if not values:
            raise SystemExit(f"bad --grid entry {item!r}, expected name=v1,v2")
        grids[name] = [int(v) for v in values.split(",")]
    return grids


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--algo", default="scluster", choices=("scluster", "foote-fmc2d", "cnmf"))
    ap.add_argument("--grid", action="append", default=[], metavar="NAME=V1,V2")
    ap.add_argument("--n-songs", type=int, default=10)
    ap.add_argument("--noise-std", type=float, default=3.5)
    ap.add_argument("--seed", type=int, default=7)
    a = ap.parse_args(argv)
    grids = parse_grid(a.grid) or {"evec_smooth": [3, 5, 9]}

    songs = synth_songs(SynthConfig(n_songs=a.n_songs, noise_std=a.noise_std, seed=a.seed))
    refs = [(s.annotation, s.downbeats, s.duration) for s in songs]
    feats = [sync_to_grid(s.features, s.downbeats) for s in songs]
    res = grid_search(a.algo, grids, refs, feats)

    names = sorted(grids)
    print("\t".join(names + ["summary"]))
    for point, score in res.table:
        print("\t".join([str(point[n]) for n in names] + [f"{score:.4f}"]))
    print("best", " ".join(f"{n}={res.best[n]}" for n in names), f"{res.best_score:.4f}")


if __name__ == "__main__":
    main()
