"""Write a synthetic tournament in the open-data layout.

    python3 scripts/make_synthetic_corpus.py /tmp/syn --matches 24 --seed 3
"""
import argparse

from gvdep.synthetic import generate_corpus


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root")
    ap.add_argument("--competition", type=int, default=9001)
    ap.add_argument("--season", type=int, default=1)
    ap.add_argument("--teams", type=int, default=8)
    ap.add_argument("--matches", type=int, default=12)
    ap.add_argument("--events", type=int, default=360, help="events per match")
    ap.add_argument("--seed", type=int, default=0)
    a = ap.parse_args()
    root = generate_corpus(a.root, competition_id=a.competition, season_id=a.season, n_teams=a.teams,
                           n_matches=a.matches, events_per_match=a.events, seed=a.seed)
    print(root)


if __name__ == "__main__":
    main()
