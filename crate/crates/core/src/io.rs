//! Solomon / Gehring–Homberger instance files and plain-text solution listings.

use std::fmt::Write as _;

use thiserror::Error;

use crate::feasibility::{self, FeasibilityReport, Violation};
use crate::instance::{Instance, InstanceError, Node, EPS};
use crate::solution::{Cost, Solution};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing section: {0}")]
    MissingSection(&'static str),
    #[error("line {line}: duplicate customer id {id}")]
    DuplicateId { line: usize, id: usize },
    #[error("line {line}: due date {due} is before ready time {ready}")]
    InvertedWindow { line: usize, ready: f64, due: f64 },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        message: message.into(),
    }
}

/// Parses the VEHICLE / CUSTOMER layout. Any run of blanks separates fields,
/// blank lines are ignored, and row 0 of the customer table is the depot.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (_, name) = lines.next().ok_or(ParseError::MissingSection("name"))?;
    let name = name.to_string();

    let mut vehicles = None;
    let mut capacity = None;
    let mut in_customers = false;
    let mut rows: Vec<(usize, Node)> = Vec::new();

    while let Some((line, content)) = lines.next() {
        let upper = content.to_ascii_uppercase();
        if upper.starts_with("VEHICLE") {
            let (hline, header) = lines.next().ok_or(ParseError::MissingSection("vehicle header"))?;
            let header = header.to_ascii_uppercase();
            if !header.contains("NUMBER") || !header.contains("CAPACITY") {
                return Err(syntax(hline, "expected NUMBER CAPACITY header"));
            }
            let (vline, values) = lines.next().ok_or(ParseError::MissingSection("vehicle data"))?;
            let fields: Vec<&str> = values.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(syntax(vline, format!("expected 2 fields, found {}", fields.len())));
            }
            vehicles = Some(
                fields[0]
                    .parse::<usize>()
                    .map_err(|_| syntax(vline, format!("invalid vehicle number '{}'", fields[0])))?,
            );
            capacity = Some(
                fields[1]
                    .parse::<u32>()
                    .map_err(|_| syntax(vline, format!("invalid capacity '{}'", fields[1])))?,
            );
        } else if upper.starts_with("CUSTOMER") {
            in_customers = true;
        } else if in_customers && upper.starts_with("CUST") {
            // column header
        } else if in_customers {
            rows.push((line, parse_row(line, content)?));
        } else {
            return Err(syntax(line, format!("unexpected content '{content}'")));
        }
    }

    let vehicles = vehicles.ok_or(ParseError::MissingSection("VEHICLE"))?;
    let capacity = capacity.ok_or(ParseError::MissingSection("VEHICLE"))?;
    if !in_customers {
        return Err(ParseError::MissingSection("CUSTOMER"));
    }
    if rows.is_empty() {
        return Err(ParseError::MissingSection("depot row"));
    }

    let mut slots: Vec<Option<Node>> = vec![None; rows.len()];
    for (line, node) in rows {
        if node.id >= slots.len() {
            return Err(syntax(line, format!("customer id {} is not dense", node.id)));
        }
        if slots[node.id].is_some() {
            return Err(ParseError::DuplicateId { line, id: node.id });
        }
        let id = node.id;
        slots[id] = Some(node);
    }
    let nodes: Vec<Node> = slots.into_iter().map(Option::unwrap).collect();
    Ok(Instance::new(name, vehicles, capacity, nodes)?)
}

fn parse_row(line: usize, content: &str) -> Result<Node, ParseError> {
    let fields: Vec<&str> = content.split_whitespace().collect();
    if fields.len() != 7 {
        return Err(syntax(
            line,
            format!("expected 7 columns, found {}", fields.len()),
        ));
    }
    let num = |i: usize, what: &str| -> Result<f64, ParseError> {
        let v: f64 = fields[i]
            .parse()
            .map_err(|_| syntax(line, format!("non-numeric {what} '{}'", fields[i])))?;
        if !v.is_finite() {
            return Err(syntax(line, format!("non-finite {what}")));
        }
        Ok(v)
    };
    let id = fields[0]
        .parse::<usize>()
        .map_err(|_| syntax(line, format!("invalid customer id '{}'", fields[0])))?;
    let demand = fields[3]
        .parse::<u32>()
        .map_err(|_| syntax(line, format!("invalid demand '{}'", fields[3])))?;
    let ready = num(4, "ready time")?;
    let due = num(5, "due date")?;
    if due < ready {
        return Err(ParseError::InvertedWindow { line, ready, due });
    }
    Ok(Node {
        id,
        x: num(1, "x coordinate")?,
        y: num(2, "y coordinate")?,
        demand,
        ready,
        due,
        service: num(6, "service time")?,
    })
}

fn fmt_num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v}")
    }
}

/// Writes an instance in the same layout `parse_instance` reads.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", instance.name);
    let _ = writeln!(out);
    let _ = writeln!(out, "VEHICLE");
    let _ = writeln!(out, "NUMBER     CAPACITY");
    let _ = writeln!(out, "{:>6} {:>12}", instance.vehicles, instance.capacity);
    let _ = writeln!(out);
    let _ = writeln!(out, "CUSTOMER");
    let _ = writeln!(
        out,
        "CUST NO.  XCOORD.   YCOORD.    DEMAND   READY TIME  DUE DATE   SERVICE TIME"
    );
    let _ = writeln!(out);
    for n in instance.nodes() {
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>10}",
            n.id,
            fmt_num(n.x),
            fmt_num(n.y),
            n.demand,
            fmt_num(n.ready),
            fmt_num(n.due),
            fmt_num(n.service)
        );
    }
    out
}

#[derive(Debug, Error)]
pub enum WriteError {
    #[error("solution has no routes")]
    Empty,
    #[error("refusing to write an infeasible solution: {}", summarize(.0))]
    Infeasible(Vec<Violation>),
}

fn summarize(violations: &[Violation]) -> String {
    let shown: Vec<String> = violations.iter().take(5).map(|v| v.to_string()).collect();
    let mut s = shown.join("; ");
    if violations.len() > 5 {
        let _ = write!(s, "; and {} more", violations.len() - 5);
    }
    s
}

/// Renders a complete, feasible solution as text. Customer order within each
/// route is preserved; the distance line is rounded to two decimals.
pub fn write_solution(solution: &Solution, instance: &Instance) -> Result<String, WriteError> {
    if solution.route_count() == 0 {
        return Err(WriteError::Empty);
    }
    let report = feasibility::is_feasible(solution, instance);
    if !report.is_feasible() {
        return Err(WriteError::Infeasible(report.violations));
    }
    let mut out = String::new();
    let _ = writeln!(out, "Instance: {}", instance.name);
    for (i, route) in solution.routes().iter().enumerate() {
        let ids: Vec<String> = route.customers().iter().map(|c| c.to_string()).collect();
        let _ = writeln!(out, "Route {} : {}", i + 1, ids.join(" "));
    }
    let _ = writeln!(out, "Vehicles: {}", solution.route_count());
    let _ = writeln!(out, "Distance: {:.2}", solution.distance());
    Ok(out)
}

/// A parsed solution listing.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionDocument {
    pub instance_name: Option<String>,
    pub routes: Vec<Vec<usize>>,
    pub declared_vehicles: Option<usize>,
    pub declared_distance: Option<f64>,
}

impl SolutionDocument {
    /// Rebuilds a solution; fails if an id is out of range or repeated.
    pub fn to_solution(&self, instance: &Instance) -> Result<Solution, Vec<Violation>> {
        let report = feasibility::check_routes(instance, &self.routes);
        let broken: Vec<Violation> = report
            .violations
            .into_iter()
            .filter(|v| v.is_structural() || matches!(v, Violation::Duplicate { .. }))
            .collect();
        if !broken.is_empty() {
            return Err(broken);
        }
        Ok(Solution::from_routes(instance, self.routes.clone()))
    }
}

pub fn parse_solution(text: &str) -> Result<SolutionDocument, ParseError> {
    let mut doc = SolutionDocument {
        instance_name: None,
        routes: Vec::new(),
        declared_vehicles: None,
        declared_distance: None,
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("Instance:") {
            doc.instance_name = Some(rest.trim().to_string());
        } else if let Some(rest) = content.strip_prefix("Route") {
            let (_, ids) = rest
                .split_once(':')
                .ok_or_else(|| syntax(line, "route line without ':'"))?;
            let ids = ids
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| syntax(line, format!("invalid customer id '{t}'")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            doc.routes.push(ids);
        } else if let Some(rest) = content.strip_prefix("Vehicles:") {
            doc.declared_vehicles = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| syntax(line, "invalid vehicle count"))?,
            );
        } else if let Some(rest) = content.strip_prefix("Distance:") {
            doc.declared_distance = Some(
                rest.trim()
                    .parse()
                    .map_err(|_| syntax(line, "invalid distance"))?,
            );
        } else {
            return Err(syntax(line, format!("unexpected content '{content}'")));
        }
    }
    Ok(doc)
}

/// Result of re-checking a solution listing against its instance.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub feasibility: FeasibilityReport,
    pub declared: Option<Cost>,
    /// The declared K or T disagrees with the recomputed one.
    pub cost_mismatch: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.feasibility.is_feasible() && !self.cost_mismatch
    }

    pub fn recomputed(&self) -> Cost {
        self.feasibility.cost
    }
}

/// Independently re-checks a written solution using only the raw instance data.
pub fn validate_solution_file(instance: &Instance, doc: &str) -> Result<ValidationReport, ParseError> {
    let parsed = parse_solution(doc)?;
    let feasibility = feasibility::check_routes(instance, &parsed.routes);
    let recomputed = feasibility.cost;
    let declared = match (parsed.declared_vehicles, parsed.declared_distance) {
        (Some(k), Some(t)) => Some(Cost::new(k, t)),
        _ => None,
    };
    let cost_mismatch = declared.is_some_and(|d| {
        // the written distance carries two decimals
        d.routes != recomputed.routes || (d.distance - recomputed.distance).abs() > 0.005 + EPS
    });
    Ok(ValidationReport {
        feasibility,
        declared,
        cost_mismatch,
    })
}
