#![allow(dead_code)]

use metricdp::engine::{seeded_rng, DpRng};
use metricdp::metric::{Database, DistanceMatrix, MetricSpec, Point, QuerySet};
use metricdp::PiecewiseLinearHypothesis;
use rand::Rng;

/// A non-negative convex 1-Lipschitz function on `[0, 1]` with a
/// subgradient oracle.
pub struct TestFunction {
    pub name: String,
    value: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    slope: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl TestFunction {
    fn new(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        slope: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Box::new(value),
            slope: Box::new(slope),
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }

    pub fn slope(&self, x: f64) -> f64 {
        (self.slope)(x)
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn max_of_lines(lines: Vec<(f64, f64)>) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let l2 = lines.clone();
    let value = move |x: f64| {
        lines
            .iter()
            .map(|(a, b)| a * x + b)
            .fold(f64::MIN, f64::max)
    };
    let slope = move |x: f64| {
        l2.iter()
            .map(|&(a, b)| (a * x + b, a))
            .fold(
                (f64::MIN, 0.0),
                |best, cur| if cur.0 > best.0 { cur } else { best },
            )
            .1
    };
    (value, slope)
}

/// Empirical per-coordinate query value of `xs`, with its subgradient.
fn empirical(xs: Vec<f64>) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let ys = xs.clone();
    let n = xs.len() as f64;
    let value = move |t: f64| xs.iter().map(|x| (x - t).abs()).sum::<f64>() / n;
    let slope = move |t: f64| ys.iter().map(|x| sgn(t - x)).sum::<f64>() / n;
    (value, slope)
}

/// The fixed suite of one-dimensional target functions.
pub fn function_suite() -> Vec<TestFunction> {
    let mut rng = seeded_rng(2024);
    let mut suite = vec![
        TestFunction::new("kink at 0.5", |x| (x - 0.5).abs(), |x| sgn(x - 0.5)),
        TestFunction::new("kink at 0.1", |x| (x - 0.1).abs(), |x| sgn(x - 0.1)),
        TestFunction::new(
            "half-slope kink at 0.83",
            |x| 0.5 * (x - 0.83).abs(),
            |x| 0.5 * sgn(x - 0.83),
        ),
        TestFunction::new(
            "quadratic centred 0.3",
            |x| 0.5 * (x - 0.3).powi(2),
            |x| x - 0.3,
        ),
        TestFunction::new("quadratic x^2/2", |x| 0.5 * x * x, |x| x),
        TestFunction::new("linear 1 - x", |x| 1.0 - x, |_| -1.0),
        TestFunction::new("constant 0.3", |_| 0.3, |_| 0.0),
        TestFunction::new(
            "softplus",
            |x: f64| 0.5 * (1.0 + (2.0 * x - 1.0).exp()).ln(),
            |x: f64| 1.0 / (1.0 + (1.0 - 2.0 * x).exp()),
        ),
    ];
    let (v, s) = max_of_lines(vec![(-1.0, 0.4), (0.0, 0.05), (0.7, -0.3), (1.0, -0.55)]);
    suite.push(TestFunction::new("max of four lines", v, s));
    let (v, s) = max_of_lines(vec![(-0.6, 0.6), (0.2, 0.1), (0.9, -0.35)]);
    suite.push(TestFunction::new("max of three lines", v, s));
    for n in [7usize, 40, 200] {
        let xs: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let (v, s) = empirical(xs);
        suite.push(TestFunction::new(format!("empirical, n={n}"), v, s));
    }
    suite
}

pub fn grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| i as f64 / (points - 1) as f64)
        .collect()
}

/// `(argmax, max)` of `|G − Ĝ|` over `grid`.
pub fn max_error(f: &TestFunction, h: &PiecewiseLinearHypothesis, grid: &[f64]) -> (f64, f64) {
    grid.iter()
        .map(|&x| (x, (f.value(x) - h.evaluate(x)).abs()))
        .fold(
            (0.0, -1.0),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        )
}

pub fn random_rows(k: usize, dim: usize, rng: &mut DpRng) -> Vec<Vec<f64>> {
    (0..k)
        .map(|_| (0..dim).map(|_| rng.random()).collect())
        .collect()
}

pub fn random_db(n: usize, dim: usize, rng: &mut DpRng) -> Database {
    Database::from_coords(random_rows(n, dim, rng)).unwrap()
}

/// Brute-force average ℓ1 distance, independent of the library's oracle.
pub fn brute_l1(rows: &[Vec<f64>], y: &[f64]) -> f64 {
    rows.iter()
        .map(|x| x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .sum::<f64>()
        / rows.len() as f64
}

fn labels(points: usize) -> Vec<String> {
    (0..points).map(|i| format!("v{i}")).collect()
}

/// Euclidean distances between random points in the unit square.
pub fn plane_metric(points: usize, rng: &mut DpRng) -> MetricSpec {
    let xy: Vec<(f64, f64)> = (0..points).map(|_| (rng.random(), rng.random())).collect();
    let rows = xy
        .iter()
        .map(|a| {
            xy.iter()
                .map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
                .collect()
        })
        .collect();
    MetricSpec::matrix(DistanceMatrix::new(labels(points), rows, true).unwrap())
}

/// Shortest-path distances on a random connected weighted graph: a random
/// spanning tree plus extra random edges.
pub fn graph_metric(points: usize, rng: &mut DpRng) -> MetricSpec {
    let inf = f64::INFINITY;
    let mut d = vec![vec![inf; points]; points];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let add = |d: &mut Vec<Vec<f64>>, a: usize, b: usize, w: f64| {
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    };
    for v in 1..points {
        let u = rng.random_range(0..v);
        let w = rng.random_range(0.05..1.0);
        add(&mut d, u, v, w);
    }
    for _ in 0..points {
        let a = rng.random_range(0..points);
        let b = rng.random_range(0..points);
        if a != b {
            let w = rng.random_range(0.05..1.0);
            add(&mut d, a, b, w);
        }
    }
    for k in 0..points {
        for i in 0..points {
            for j in 0..points {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    MetricSpec::matrix(DistanceMatrix::new(labels(points), d, true).unwrap())
}

/// Labels sampled with replacement from a matrix metric.
pub fn sample_labels(metric: &MetricSpec, count: usize, rng: &mut DpRng) -> Vec<Point> {
    let all = metric.distance_matrix().unwrap().labels().to_vec();
    (0..count)
        .map(|_| Point::label(all[rng.random_range(0..all.len())].clone()))
        .collect()
}

pub fn label_instance(
    metric: &MetricSpec,
    n: usize,
    k: usize,
    rng: &mut DpRng,
) -> (Database, QuerySet) {
    let db = Database::new(sample_labels(metric, n, rng)).unwrap();
    let q = QuerySet::new(sample_labels(metric, k, rng)).unwrap();
    (db, q)
}

/// Prints the one-line verdict for a criterion.
pub fn verdict(id: &str, name: &str, pass: bool, detail: &str, seconds: f64) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("[{tag}] {id} {name}: {detail} ({seconds:.2}s)");
}
