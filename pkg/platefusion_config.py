# Example configuration, load with `platefusion run stream.jsonl --config platefusion_config.py`
import os

# Brazilian plates, three letters then four digits
c.PlateReader.layout = 'AAA-NNNN'

# gate at half the median character width of each frame
c.PlateReader.epsilon_mode = 'relative'
c.PlateReader.epsilon = 0.5

# drop tracks of one-off spurious detections
c.PlateReader.min_hits = 2
c.PlateReader.workers = int(os.environ.get("PLATEFUSION_WORKERS", "1"))

# skip malformed records of live detector output instead of aborting
c.StreamReader.strict = False

# scenarios for `platefusion simulate` and `platefusion bench`
c.ScenarioConfig.n_frames = 30
c.ScenarioConfig.tilt_deg = 15.0
c.ScenarioConfig.gamma_tilt_noise = 1.0
c.ScenarioConfig.seed = 42
