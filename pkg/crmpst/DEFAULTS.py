## RESERVED TOKENS
CRASH_LABEL = "crash"
SORT_NAMES = ("Unit", "Int", "Bool", "Str")


## EXPLORATION BOUNDS
QUEUE_BOUND = 8             # messages per channel
STATE_BOUND = 100_000       # distinct states per exploration
CYCLE_LEN_BOUND = 12        # longest lasso cycle searched for liveness


## SESSION RUNS
MAX_STEPS = 1000
CRASH_PROBABILITY = 0.1     # per step, seeded schedules
MAX_CRASHES = 2
SESSION_STATE_BOUND = 50_000


## FILES AND ENVIRONMENT
PROTOCOL_EXTENSION = ".crmpst"
PROCESS_EXTENSION = ".crproc"
COLOR_ENV = "CRMPST_COLOR"
