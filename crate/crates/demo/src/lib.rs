//! Browser bindings: generate an instance, shrink the fleet, then shorten the routes.
//! Every call takes and returns JSON strings.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use vrptw_core::config::RunConfig;
use vrptw_core::driver::initial_population;
use vrptw_core::generator::{generate, GeneratorConfig, Layout};
use vrptw_core::io::{parse_instance, write_instance};
use vrptw_core::memetic::run_ma;
use vrptw_core::moves::Neighborhood;
use vrptw_core::parallel::{run_pha, PhaConfig};
use vrptw_core::{check_routes, Instance, Solution};

#[derive(Serialize)]
struct Point {
    id: usize,
    x: f64,
    y: f64,
    demand: u32,
    ready: f64,
    due: f64,
}

#[derive(Serialize)]
struct InstanceView {
    name: String,
    capacity: u32,
    k_min: usize,
    nodes: Vec<Point>,
    text: String,
}

#[derive(Serialize, Deserialize)]
pub struct SolutionView {
    pub routes: Vec<Vec<usize>>,
    pub vehicles: usize,
    pub distance: f64,
    pub feasible: bool,
    pub millis: f64,
}

fn view(inst: &Instance, sol: &Solution, millis: f64) -> SolutionView {
    let routes = sol.to_sequences();
    SolutionView {
        feasible: check_routes(inst, &routes).is_feasible(),
        routes,
        vehicles: sol.route_count(),
        distance: sol.distance(),
        millis,
    }
}

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

fn instance_from(text: &str) -> Result<Instance, String> {
    parse_instance(text).map_err(|e| e.to_string())
}

pub fn generate_json(customers: usize, layout: &str, seed: u64) -> Result<String, String> {
    if !(1..=400).contains(&customers) {
        return Err("customer count must be between 1 and 400".into());
    }
    let layout: Layout = layout.parse()?;
    let inst = generate(&GeneratorConfig {
        name: format!("demo-{customers}-{seed}"),
        customers,
        layout,
        seed,
        ..GeneratorConfig::default()
    });
    let nodes = inst
        .nodes()
        .iter()
        .map(|n| Point {
            id: n.id,
            x: n.x,
            y: n.y,
            demand: n.demand,
            ready: n.ready,
            due: n.due,
        })
        .collect();
    Ok(json(&InstanceView {
        name: inst.name.clone(),
        capacity: inst.capacity,
        k_min: inst.k_min(),
        nodes,
        text: write_instance(&inst),
    }))
}

pub fn minimize_routes_json(instance_text: &str, seed: u64, seconds: f64) -> Result<String, String> {
    let inst = instance_from(instance_text)?;
    let config = RunConfig::default();
    let nbrs = Neighborhood::new(&inst, config.remove_route.mu);
    let pha = PhaConfig {
        threads: 1,
        time_limit: seconds.clamp(0.1, 120.0),
        ..config.pha_config()
    };
    let started = web_time::Instant::now();
    let out = run_pha(&inst, &nbrs, &pha, seed, None).map_err(|e| e.to_string())?;
    Ok(json(&view(&inst, &out.best, started.elapsed().as_secs_f64() * 1e3)))
}

pub fn minimize_distance_json(instance_text: &str, solution_json: &str, seed: u64, generations: usize) -> Result<String, String> {
    let inst = instance_from(instance_text)?;
    let given: SolutionView = serde_json::from_str(solution_json).map_err(|e| e.to_string())?;
    let report = check_routes(&inst, &given.routes);
    if !report.is_feasible() {
        return Err("the starting solution is not feasible".into());
    }
    let start = Solution::from_routes(&inst, given.routes);

    let mut config = RunConfig {
        seed,
        ..RunConfig::default()
    };
    config.memetic.population = 12;
    config.memetic.init_time_limit = 2.0;
    config.memetic.time_limit = 30.0;
    config.memetic.max_generations = Some(generations.clamp(1, 200));
    let nbrs = Neighborhood::new(&inst, config.memetic.mu);
    let started = web_time::Instant::now();
    let pop = initial_population(&inst, &nbrs, &config, start).map_err(|e| e.to_string())?;
    let out = run_ma(&inst, &nbrs, pop, &config.ma_params(), seed).map_err(|e| e.to_string())?;
    Ok(json(&view(&inst, &out.best, started.elapsed().as_secs_f64() * 1e3)))
}

#[wasm_bindgen]
pub fn generate_instance(customers: usize, layout: &str, seed: u32) -> Result<String, JsValue> {
    generate_json(customers, layout, seed as u64).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn minimize_routes(instance_text: &str, seed: u32, seconds: f64) -> Result<String, JsValue> {
    minimize_routes_json(instance_text, seed as u64, seconds).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn minimize_distance(instance_text: &str, solution_json: &str, seed: u32, generations: usize) -> Result<String, JsValue> {
    minimize_distance_json(instance_text, solution_json, seed as u64, generations).map_err(|e| JsValue::from_str(&e))
}
