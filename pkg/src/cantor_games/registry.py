"""Strategy lookup by name, as used in config files.

Bob names map to ``factory(cfg)``.  Alice names read their options from
``cfg.params``:

- ``star`` / ``bipartite_star``: ``star_d``, ``star_mode`` (compressed or
  explicit; default picks compressed for clonable Bobs), ``star_pool``,
  ``epsilons`` (comma-separated dyadics).
- ``random``: ``count``, ``profile``.
- ``schedule``: ``schedule`` (CSV path).
"""

from .alice import (
    RandomAdversary, ScheduleAdversary, StarAdversary, load_schedule,
)
from .blocks import (
    blaming_with_extras, composed_full, region_block_blaming, set_friends,
    set_groups, set_leaders,
)
from .bob import (
    dynamic_regions, greedy_pairs, set_greedy_hypergraph, static_regions,
)
from .dyadic import parse_dyadic
from .game import ConfigError, ConstantBob, trivial_small_allocator

BOBS = {
    "greedy_pairs": greedy_pairs,
    "set_greedy_hypergraph": set_greedy_hypergraph,
    "static_regions": static_regions,
    "dynamic_regions": dynamic_regions,
    "region_block_blaming": region_block_blaming,
    "blaming_with_extras": blaming_with_extras,
    "composed_full": composed_full,
    "set_leaders": set_leaders,
    "set_friends": set_friends,
    "set_groups": set_groups,
    "trivial_small_allocator": lambda cfg: trivial_small_allocator(cfg),
    "constant": lambda cfg: ConstantBob(cfg.params.get("address", "0")),
}

ALICES = ("star", "bipartite_star", "random", "schedule")


def make_bob(cfg):
    try:
        factory = BOBS[cfg.bob]
    except KeyError:
        raise ConfigError(f"unknown bob {cfg.bob!r}") from None
    return factory(cfg)


def make_alice(cfg, bob=None):
    p = cfg.params
    name = cfg.alice
    if name in ("star", "bipartite_star"):
        eps = p.get("epsilons")
        eps = [parse_dyadic(x) for x in eps.split(",")] if eps else None
        d = parse_dyadic(p["star_d"]) if p.get("star_d") else None
        mode = p.get("star_mode") or (
            "compressed" if bob is not None and bob.clonable else "explicit")
        pool = int(p["star_pool"]) if p.get("star_pool") else None
        return StarAdversary(d, epsilons=eps, mode=mode, pool=pool,
                             bipartite=name == "bipartite_star")
    if name == "random":
        return RandomAdversary(int(p.get("count", 1000)), p.get("profile", "uniform"))
    if name == "schedule":
        if not p.get("schedule"):
            raise ConfigError("schedule adversary needs schedule = PATH")
        try:
            rows = load_schedule(p["schedule"], cfg.d, cfg.arity)
        except (OSError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return ScheduleAdversary(rows)
    raise ConfigError(f"unknown alice {name!r}")
