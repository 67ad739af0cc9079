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

//! Dependence on external customers (DOEC) and suppliers (DOES).

use crate::netbuild::FlowGraph;
use crate::types::Orientation;

/// Shares of a city's sales and purchases that cross the city boundary.
/// `None` where the denominator is zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dependence {
    pub doec: Option<f64>,
    pub does: Option<f64>,
}

/// `doec = received / (received + internal)` and
/// `does = paid / (paid + internal)`, with `received` and `paid` the
/// inter-city money inflow and outflow. Reads the graph in money-flow
/// terms whatever its stored orientation.
pub fn dependence_measures(g: &FlowGraph) -> Vec<Dependence> {
    let n = g.node_count();
    let mut inflow = vec![0u128; n];
    let mut outflow = vec![0u128; n];
    for (u, v, w) in g.edges() {
        let (payer, payee) = match g.orientation() {
            Orientation::MoneyFlow => (u, v),
            Orientation::Reversed => (v, u),
        };
        outflow[payer] += w as u128;
        inflow[payee] += w as u128;
    }
    (0..n)
        .map(|i| {
            let internal = g.internal_volume(i) as u128;
            Dependence { doec: share(inflow[i], internal), does: share(outflow[i], internal) }
        })
        .collect()
}

fn share(external: u128, internal: u128) -> Option<f64> {
    let total = external + internal;
    (total > 0).then(|| external as f64 / total as f64)
}
