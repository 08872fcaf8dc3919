"""
Misc. general utility functions, not tied to plate reading directly
"""

import os
import re
from concurrent.futures import ThreadPoolExecutor

from traitlets import TraitError
from traitlets.config import Config

# key = value, with optional '#' comments
_flat_line_pattern = re.compile(r'^\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.*?)\s*$')

# flat config keys and the configurables they set
FLAT_CONFIG_KEYS = {
    'epsilon': ['PlateReader'],
    'epsilon_mode': ['PlateReader'],
    'min_hits': ['PlateReader'],
    'layout': ['PlateReader'],
    'enable_rotation': ['PlateReader'],
    'workers': ['PlateReader'],
    'gamma_tilt_noise': ['ScenarioConfig'],
    'seed': ['ScenarioConfig'],
    'strict': ['StreamReader'],
}


def is_traitlets_config_file(path):
    """python and json config files are loaded by traitlets itself"""
    return os.path.splitext(path)[1] in {'.py', '.json'}


def parse_flat_config(text, source='config'):
    """
    Parse a flat `key = value` config file into {key: raw string}.

    Blank lines and lines starting with '#' are ignored. Later keys override
    earlier ones.
    """
    values = {}
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith('#'):
            continue
        match = _flat_line_pattern.match(stripped)
        if not match:
            raise TraitError(f"{source}:{line_number}: expected 'key = value'")
        key, value = match.groups()
        if key not in FLAT_CONFIG_KEYS:
            raise TraitError(f"{source}:{line_number}: unknown config key '{key}'")
        values[key] = value
    return values


def flat_config_to_config(values, classes):
    """
    Turn parsed flat config values into a traitlets Config, converting each
    value with the `from_string` of the trait it sets.
    """
    by_name = {cls.__name__: cls for cls in classes}
    config = Config()
    for key, raw in values.items():
        for class_name in FLAT_CONFIG_KEYS[key]:
            trait = by_name[class_name].class_traits()[key]
            try:
                value = trait.from_string(raw)
            except (TraitError, ValueError) as e:
                raise TraitError(f"invalid value {raw!r} for {key}: {e}") from None
            config[class_name][key] = value
    return config


def map_in_order(fn, items, workers=1):
    """
    Map `fn` over `items` on a thread pool, returning results in input order.

    With a single worker everything runs in the calling thread.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
