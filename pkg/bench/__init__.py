from bench.mixed import run_mixed_check
from bench.poisson import run_poisson
from bench.wave import run_wave
