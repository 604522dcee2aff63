from .schedule import TransmissionSchedule, transmission_schedule
from .state import LdtState
from .checker import validate_ldt, inorder_ranks
from .programs import (
    fragment_broadcast,
    upcast_min,
    transmit_adjacent,
    ldt_broadcast,
    ldt_ranking,
)
from .construct import ldt_construct_round, PipelinePlan

__all__ = [
    "TransmissionSchedule",
    "transmission_schedule",
    "LdtState",
    "validate_ldt",
    "inorder_ranks",
    "fragment_broadcast",
    "upcast_min",
    "transmit_adjacent",
    "ldt_broadcast",
    "ldt_ranking",
    "ldt_construct_round",
    "PipelinePlan",
]
