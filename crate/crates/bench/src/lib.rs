// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


//! Shared fixtures for the criterion benches.

use std::path::PathBuf;

use citynet_core::netbuild::FlowGraph;
use citynet_core::output::RunManifest;
use citynet_core::pipeline::{load_dataset, load_graphs_from_dataset, Dataset};
use citynet_core::synth::{generate, SynthConfig};

/// A generated dataset kept on disk for the lifetime of the value.
pub struct Fixture {
    dir: PathBuf,
    pub config: SynthConfig,
}

impl Fixture {
    pub fn new(config: SynthConfig) -> Fixture {
        let dir = std::env::temp_dir().join(format!("citynet-bench-{}-{}", std::process::id(), config.seed));
        std::fs::create_dir_all(&dir).expect("bench temp dir");
        generate(&config, &dir).expect("synthetic dataset");
        Fixture { dir, config }
    }

    pub fn default_run() -> Fixture {
        Fixture::new(SynthConfig::default())
    }

    pub fn graphs(&self) -> Vec<FlowGraph> {
        load_graphs_from_dataset(&self.dir, self.config.years, &mut RunManifest::new("bench")).expect("graphs")
    }

    pub fn dataset(&self) -> Dataset {
        load_dataset(&self.dir, &mut RunManifest::new("bench")).expect("dataset")
    }

    pub fn path(&self) -> &std::path::Path {
        &self.dir
    }
}

impl Drop for Fixture {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.dir);
    }
}
