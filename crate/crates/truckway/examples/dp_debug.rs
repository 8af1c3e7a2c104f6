use truckway::map::SlopeProfile;
use truckway::pcc::{dp_oracle, PccFuelModel, PccProblem};
use truckway::truck::{FuelMap, TruckParams};

fn main() {
    let params = TruckParams::empty_load();
    let map = FuelMap::bundled();
    let fuel = PccFuelModel::fit(&params, &map, 1300.0);
    println!("fuel: idle={} k1={} k2={}", fuel.idle, fuel.k1, fuel.k2);
    let prob = PccProblem::new(120.0, 20.0, 25.0, 25, 0.0, SlopeProfile::flat(), &params, fuel).unwrap();
    let sol = dp_oracle(&prob, 2.0, 0.5).unwrap();
    println!("stages={} states={} cost={}", sol.stages, sol.states_per_stage, sol.cost);
    for i in 0..sol.profile.node_count() {
        println!("node {i}: s={:.3} v={:.3}", sol.profile.position_at_node(i), sol.profile.speed_at_node(i));
    }
    // manual constant-path cost through the same stage formula
    let k = sol.stages;
    let dt = 120.0 / k as f64;
    let mut manual = 0.0;
    for j in 0..k {
        let s = 20.0 * dt * j as f64 + 20.0 * dt / 2.0;
        manual += dt * (prob.fuel.flow(prob.power_kw(s, 20.0, 0.0)) + 0.0);
    }
    println!("constant path cost through stage formula: {manual}");
}
