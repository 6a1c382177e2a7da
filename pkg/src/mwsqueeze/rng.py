"""Counter-based random streams for reproducible parallel trials.

Stream splitting rule: every random draw in a run belongs to a stream
addressed by (master_seed, trial_id, step_index). The Philox generator is
keyed with (master_seed, trial_id) and its 256-bit counter starts at block
``step_index * 2**128``, so distinct steps of the same trial can never
collide (a step would have to consume 2**128 blocks first) and the stream
contents are independent of execution order or thread count.
"""

import numpy as np

_BLOCKS_PER_STEP = 1 << 128


def stream(master_seed: int, trial_id: int, step_index: int) -> np.random.Generator:
    """Return the Generator for one (master_seed, trial_id, step_index) cell.

    All three indices are non-negative integers; master_seed and trial_id
    must fit in 64 bits.
    """
    if not 0 <= master_seed < 1 << 64:
        raise ValueError("master_seed must be a 64-bit unsigned integer")
    if not 0 <= trial_id < 1 << 64:
        raise ValueError("trial_id must be a 64-bit unsigned integer")
    if step_index < 0:
        raise ValueError("step_index must be non-negative")
    bits = np.random.Philox(
        counter=step_index * _BLOCKS_PER_STEP,
        key=np.array([master_seed, trial_id], dtype=np.uint64),
    )
    return np.random.Generator(bits)
