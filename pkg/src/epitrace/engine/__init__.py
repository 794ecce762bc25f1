"""Execution engine: event-loop kernels and backend selection."""

from ._impl import (
    ADV_BOUNDARY,
    ADV_EXTINCT,
    CNT_CTD,
    CNT_E,
    CNT_ESET,
    CNT_EV,
    CNT_H,
    CNT_I,
    CNT_INF,
    CNT_ISET,
    CNT_R,
    CNT_S,
    COMP_E,
    COMP_H,
    COMP_I,
    COMP_R,
    COMP_S,
    COUNTS_LEN,
    EV_ACTIVATE,
    EV_HOSP,
    EV_INFECT,
    EV_RECOVER,
    EV_SEED,
)
from .backends import Backend, active_backend, default_backend_name, get_backend

__all__ = [
    "ADV_BOUNDARY",
    "ADV_EXTINCT",
    "CNT_CTD",
    "CNT_E",
    "CNT_ESET",
    "CNT_EV",
    "CNT_H",
    "CNT_I",
    "CNT_INF",
    "CNT_ISET",
    "CNT_R",
    "CNT_S",
    "COMP_E",
    "COMP_H",
    "COMP_I",
    "COMP_R",
    "COMP_S",
    "COUNTS_LEN",
    "EV_ACTIVATE",
    "EV_HOSP",
    "EV_INFECT",
    "EV_RECOVER",
    "EV_SEED",
    "Backend",
    "active_backend",
    "default_backend_name",
    "get_backend",
]
