"""Parallel sort-merge equi-join engine."""

from ._mpsm import (
    Algorithm,
    AllocPolicy,
    ConfigError,
    ConsistencyError,
    Distribution,
    DomainError,
    Error,
    FormatError,
    JoinConfig,
    JoinResult,
    KeyDomain,
    QueryMode,
    Relation,
    RolePolicy,
    choose_roles,
    generate,
    hash_join,
    interpolation_search,
    plan_splitters,
    read_relation,
    run_join,
    sort_run,
    split_relevant_cost,
    write_relation,
)


def join(r, s, algorithm=Algorithm.pmpsm, threads=1, **options):
    """Run one join with a config built from keyword arguments."""
    cfg = JoinConfig()
    cfg.algorithm = algorithm
    cfg.threads = threads
    for name, value in options.items():
        if not hasattr(cfg, name):
            raise TypeError(f"unknown join option {name!r}")
        setattr(cfg, name, value)
    return run_join(r, s, cfg)


__all__ = [name for name in dir() if not name.startswith("_")]
