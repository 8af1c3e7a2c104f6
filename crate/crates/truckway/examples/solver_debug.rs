use truckway::map::SlopeProfile;
use truckway::pcc::{objective, solve_pcc, PccFuelModel, PccProblem};
use truckway::truck::{FuelMap, TruckParams};

fn main() {
    let params = TruckParams::empty_load();
    let map = FuelMap::bundled();
    let fuel = PccFuelModel::fit(&params, &map, 1300.0);
    let prob = PccProblem::new(300.0, 20.0, 25.0, 101, 0.0,
        SlopeProfile::sinusoidal(30.0, 3000.0, 20_000.0), &params, fuel).unwrap();
    let (profile, report) = solve_pcc(&prob).unwrap();
    println!("report: {:?}", report);
    let (j_const, _) = objective(&prob.constant_profile_nodes(), &prob);
    println!("const J = {j_const}");
    let mut vmin: f64 = 100.0; let mut vmax: f64 = 0.0;
    for i in 0..prob.n {
        vmin = vmin.min(profile.speed_at_node(i));
        vmax = vmax.max(profile.speed_at_node(i));
    }
    println!("v range [{vmin}, {vmax}]");
    // gradient norm structure at the final iterate
    let mut x = Vec::new();
    for i in 0..prob.n { x.push(profile.position_at_node(i)); x.push(profile.speed_at_node(i)); }
    let (j, g) = objective(&x, &prob);
    println!("final J = {j}");
    let h = prob.element_dt();
    let mut gmax_s: f64 = 0.0; let mut gmax_v: f64 = 0.0;
    for i in 1..prob.n-1 {
        gmax_s = gmax_s.max((g[2*i]*h).abs());
        gmax_v = gmax_v.max(g[2*i+1].abs());
    }
    println!("scaled gmax_s={gmax_s} gmax_v={gmax_v}");
    let t0 = std::time::Instant::now();
    let dp = truckway::pcc::dp_oracle(&prob, 1.0, 0.25).unwrap();
    println!("DP cost = {} ({} stages, {} states, {:?})", dp.cost, dp.stages, dp.states_per_stage, t0.elapsed());
    println!("solver/DP ratio = {}", report.objective / dp.cost);
}
// quick DP cross-check appended by debugging session
