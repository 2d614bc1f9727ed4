from .output import emit, read_csv, write_csv
from .runner import (
    SweepResult,
    aggregate,
    ee_ranking,
    prepare_point,
    run_point,
    run_single,
    run_trial,
    sweep_antennas,
    sweep_power,
    sweep_spacing,
)
from .scenario import Scenario, dbm_to_watt, load_scenario, scenario_from_dict
