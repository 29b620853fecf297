"""Deterministic execution of AArch64 integer blocks and IO equivalence."""
from .equivalence import (
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    EffectSet,
    EquivalenceVerdict,
    io_equivalent,
    observable_effects,
    own_frame,
    trial_seed,
)
from .machine import (
    INITIAL_SP,
    ExecutionResult,
    MachineState,
    Store,
    TerminatorOutcome,
    Trap,
    add_with_carry,
    sdiv,
    udiv,
    init_state,
    run_block,
    symbol_address,
)
