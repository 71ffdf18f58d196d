use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use debris_core::mission::{ParkingOrbit, Scenario};
use debris_core::scenarios::{MissionClock, SplitPart};
use debris_core::tle::{read_tle_file, write_tle_file, DatasetSplit};

const PARTS: [(&str, SplitPart); 3] = [
    ("train.tle", SplitPart::Train),
    ("test.tle", SplitPart::Test),
    ("eval.tle", SplitPart::Eval),
];

#[derive(Debug, Serialize, Deserialize)]
struct SplitInfo {
    seed: u64,
    train: usize,
    test: usize,
    eval: usize,
}

pub fn write_split(dir: &Path, split: &DatasetSplit) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (file, part) in PARTS {
        let path = dir.join(file);
        write_tle_file(&path, part.of(split)).with_context(|| format!("writing {}", path.display()))?;
    }
    let (train, test, eval) = split.sizes();
    let info = SplitInfo {
        seed: split.seed,
        train,
        test,
        eval,
    };
    std::fs::write(dir.join("split.json"), serde_json::to_string_pretty(&info)? + "\n")?;
    Ok(())
}

pub fn read_split(dir: &Path) -> Result<DatasetSplit> {
    let info: SplitInfo = {
        let path = dir.join("split.json");
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("{} is not a split directory (run `debris split`)", dir.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
    };
    let mut split = DatasetSplit {
        train: Vec::new(),
        test: Vec::new(),
        eval: Vec::new(),
        seed: info.seed,
    };
    for (file, part) in PARTS {
        let records = read_tle_file(&dir.join(file))?;
        match part {
            SplitPart::Train => split.train = records,
            SplitPart::Test => split.test = records,
            SplitPart::Eval => split.eval = records,
        }
    }
    Ok(split)
}

/// A batch of generated scenarios with what is needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub part: SplitPart,
    pub seed: u64,
    pub n_debris: usize,
    pub clock: MissionClock,
    pub parking: ParkingOrbit,
    pub scenarios: Vec<Scenario>,
}

impl ScenarioFile {
    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).context("serializing scenarios")?;
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for (k, s) in file.scenarios.iter().enumerate() {
            Scenario::new(s.debris.clone(), s.chaser_start)
                .with_context(|| format!("{}: scenario {k}", path.display()))?;
        }
        Ok(file)
    }
}
