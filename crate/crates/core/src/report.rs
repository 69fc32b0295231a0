//! Report generation: market shares, cost breakdowns, contract timelines,
//! demand-source and electricity profiles, rendered as text, CSV and SVG.
//!
//! Reports are pure views over a decoded outcome; rebuilding one from the
//! same outcome yields identical values. Text tables round percentages
//! half-even to integers; CSV and SVG carry full precision, and the SVG
//! embeds each plotted number in a `data-value` attribute so the two
//! formats can be cross-checked mechanically.

use serde::{Deserialize, Serialize};

use crate::outcome::GameOutcome;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ShareRow {
    pub firm: String,
    pub profit: f64,
    /// Percentage of total profit; None when the total is not positive.
    pub share_pct: Option<f64>,
    /// Change versus the status-quo profit; None when that profit is zero.
    pub change_pct: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CostRow {
    pub firm: String,
    pub total: f64,
    /// Percentages per component; None when the firm has no cost at all.
    pub service_pct: Option<f64>,
    pub electricity_pct: Option<f64>,
    pub inventory_pct: Option<f64>,
    pub acquisition_pct: Option<f64>,
    pub forfeit_pct: Option<f64>,
}

/// One contract engagement: a customer served by a firm under a contract
/// from `start` to `end` (1-based, inclusive). Rows per customer tile the
/// horizon without gaps.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimelineRow {
    pub customer: String,
    pub firm: String,
    pub contract: String,
    pub start: usize,
    pub end: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodSources {
    pub period: usize,
    pub assigned_demand: f64,
    /// Fractions of assigned demand; they sum to 1 on active periods.
    pub in_house: f64,
    pub swapped: f64,
    pub spot: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ElectricityRow {
    pub period: usize,
    pub in_band: f64,
    pub over: f64,
    pub under: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarketReport {
    pub mode: String,
    pub shares: Vec<ShareRow>,
    pub breakdown: Vec<CostRow>,
    pub timeline: Vec<TimelineRow>,
    /// Demand-source profile per firm.
    pub demand_sources: Vec<(String, Vec<PeriodSources>)>,
    /// Energy-band profile per firm.
    pub electricity: Vec<(String, Vec<ElectricityRow>)>,
}

/// Market share and profit change against the status quo.
pub fn market_share_report(out: &GameOutcome, sq_profits: Option<&[f64]>) -> Vec<ShareRow> {
    let total = out.total_profit();
    out.firms
        .iter()
        .enumerate()
        .map(|(f, firm)| {
            let profit = out.profits[f];
            let share_pct = (total > 0.0).then(|| 100.0 * profit / total);
            let change_pct = sq_profits.and_then(|sq| {
                let base = sq[f];
                (base != 0.0).then(|| 100.0 * (profit - base) / base)
            });
            ShareRow {
                firm: firm.clone(),
                profit,
                share_pct,
                change_pct,
            }
        })
        .collect()
}

/// Percentage of each firm's total cost attributed to service,
/// electricity, inventory, acquisition and forfeit.
pub fn cost_breakdown(out: &GameOutcome) -> Vec<CostRow> {
    out.firms
        .iter()
        .enumerate()
        .map(|(f, firm)| {
            let sums = [
                out.service_cost[f].iter().sum::<f64>(),
                out.energy_cost[f].iter().sum::<f64>(),
                out.inventory_cost[f].iter().sum::<f64>(),
                out.acquisition_cost[f].iter().sum::<f64>(),
                out.forfeit_cost[f].iter().sum::<f64>(),
            ];
            let total: f64 = sums.iter().sum();
            let pct = |x: f64| (total > 0.0).then(|| 100.0 * x / total);
            CostRow {
                firm: firm.clone(),
                total,
                service_pct: pct(sums[0]),
                electricity_pct: pct(sums[1]),
                inventory_pct: pct(sums[2]),
                acquisition_pct: pct(sums[3]),
                forfeit_pct: pct(sums[4]),
            }
        })
        .collect()
}

/// Customers ranked by total demand, descending, ties by id.
pub fn top_customers(out: &GameOutcome, top_n: usize) -> Vec<usize> {
    let mut totals: Vec<(usize, f64)> = (0..out.customers.len())
        .map(|c| {
            let total: f64 = out
                .tank_customer
                .iter()
                .enumerate()
                .filter(|&(_, &tc)| tc == c)
                .map(|(t, _)| out.tank_demand[t].iter().sum::<f64>())
                .sum();
            (c, total)
        })
        .collect();
    totals.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| out.customers[a.0].cmp(&out.customers[b.0]))
    });
    totals.truncate(top_n);
    totals.into_iter().map(|(c, _)| c).collect()
}

/// Contract timeline of the highest-demand customers. Rows start at
/// signing events and run until the next signing or the horizon end.
pub fn contract_gantt(out: &GameOutcome, top_n: usize) -> Vec<TimelineRow> {
    let mut rows = Vec::new();
    for &c in &top_customers(out, top_n) {
        let mut signings: Vec<(usize, usize, usize)> = Vec::new(); // (p, f, k)
        for f in 0..out.firms.len() {
            for k in 0..out.contract_ids.len() {
                for p in 0..out.periods {
                    if out.sign[c][f][k][p] > 0.5 {
                        signings.push((p, f, k));
                    }
                }
            }
        }
        signings.sort_unstable();
        for (i, &(p, f, k)) in signings.iter().enumerate() {
            let end = signings
                .get(i + 1)
                .map(|&(q, _, _)| q)
                .unwrap_or(out.periods);
            rows.push(TimelineRow {
                customer: out.customers[c].clone(),
                firm: out.firms[f].clone(),
                contract: out.contract_ids[k].clone(),
                start: p + 1,
                end,
            });
        }
    }
    rows
}

/// Fractions of one firm's assigned demand met in-house, by incoming
/// swaps, and from the spot market, per period.
pub fn demand_breakdown(out: &GameOutcome, f: usize) -> Vec<PeriodSources> {
    (0..out.periods)
        .map(|p| {
            let mut in_house = 0.0;
            let mut swapped = 0.0;
            let mut spot = 0.0;
            for t in 0..out.tanks.len() {
                in_house += out.supply[t][f][p];
                spot += out.spot[t][f][p];
                for g in 0..out.firms.len() {
                    if g != f {
                        swapped += out.swap[t][g][f][p];
                    }
                }
            }
            let total = in_house + swapped + spot;
            let frac = |x: f64| if total > 0.0 { x / total } else { 0.0 };
            PeriodSources {
                period: p + 1,
                assigned_demand: total,
                in_house: frac(in_house),
                swapped: frac(swapped),
                spot: frac(spot),
            }
        })
        .collect()
}

pub fn electricity_profile(out: &GameOutcome, f: usize) -> Vec<ElectricityRow> {
    (0..out.periods)
        .map(|p| ElectricityRow {
            period: p + 1,
            in_band: out.band[f][p],
            over: out.over[f][p],
            under: out.under[f][p],
        })
        .collect()
}

/// Assemble the full report.
pub fn build_report(
    out: &GameOutcome,
    sq_profits: Option<&[f64]>,
    top_n: usize,
) -> MarketReport {
    MarketReport {
        mode: out.mode.to_string(),
        shares: market_share_report(out, sq_profits),
        breakdown: cost_breakdown(out),
        timeline: contract_gantt(out, top_n),
        demand_sources: out
            .firms
            .iter()
            .enumerate()
            .map(|(f, firm)| (firm.clone(), demand_breakdown(out, f)))
            .collect(),
        electricity: out
            .firms
            .iter()
            .enumerate()
            .map(|(f, firm)| (firm.clone(), electricity_profile(out, f)))
            .collect(),
    }
}

fn pct_text(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{}", x.round_ties_even() as i64),
        None => "n/a".to_string(),
    }
}

fn full(v: f64) -> String {
    format!("{v:.16e}")
}

fn pct_full(v: Option<f64>) -> String {
    match v {
        Some(x) => full(x),
        None => "n/a".to_string(),
    }
}

/// Human-readable tables with integer percentages.
pub fn render_text(report: &MarketReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("market outcome ({})\n\n", report.mode));
    s.push_str("market share and profit change\n");
    s.push_str("firm  profit           share%  change%\n");
    for r in &report.shares {
        s.push_str(&format!(
            "{:<5} {:<16.2} {:>6}  {:>7}\n",
            r.firm,
            r.profit,
            pct_text(r.share_pct),
            pct_text(r.change_pct),
        ));
    }
    s.push_str("\ncost breakdown (% of firm total)\n");
    s.push_str("firm  service  electricity  inventory  acquisition  forfeit\n");
    for r in &report.breakdown {
        s.push_str(&format!(
            "{:<5} {:>7}  {:>11}  {:>9}  {:>11}  {:>7}\n",
            r.firm,
            pct_text(r.service_pct),
            pct_text(r.electricity_pct),
            pct_text(r.inventory_pct),
            pct_text(r.acquisition_pct),
            pct_text(r.forfeit_pct),
        ));
    }
    s.push_str("\ncontract timeline (top customers by demand)\n");
    s.push_str("customer  firm  contract  periods\n");
    for r in &report.timeline {
        s.push_str(&format!(
            "{:<9} {:<5} {:<9} {}..{}\n",
            r.customer, r.firm, r.contract, r.start, r.end
        ));
    }
    s
}

/// CSV files, one per section, full precision.
pub fn render_csv(report: &MarketReport) -> Vec<(String, String)> {
    let mut files = Vec::new();

    let mut s = String::from("firm,profit,share_pct,change_pct\n");
    for r in &report.shares {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.firm,
            full(r.profit),
            pct_full(r.share_pct),
            pct_full(r.change_pct)
        ));
    }
    files.push(("market_shares.csv".to_string(), s));

    let mut s =
        String::from("firm,total,service_pct,electricity_pct,inventory_pct,acquisition_pct,forfeit_pct\n");
    for r in &report.breakdown {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.firm,
            full(r.total),
            pct_full(r.service_pct),
            pct_full(r.electricity_pct),
            pct_full(r.inventory_pct),
            pct_full(r.acquisition_pct),
            pct_full(r.forfeit_pct)
        ));
    }
    files.push(("cost_breakdown.csv".to_string(), s));

    let mut s = String::from("customer,firm,contract,start,end\n");
    for r in &report.timeline {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.customer, r.firm, r.contract, r.start, r.end
        ));
    }
    files.push(("timeline.csv".to_string(), s));

    for (firm, rows) in &report.demand_sources {
        let mut s = String::from("period,assigned_demand,in_house,swapped,spot\n");
        for r in rows {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.period,
                full(r.assigned_demand),
                full(r.in_house),
                full(r.swapped),
                full(r.spot)
            ));
        }
        files.push((format!("demand_sources_{firm}.csv"), s));
    }

    for (firm, rows) in &report.electricity {
        let mut s = String::from("period,in_band,over,under\n");
        for r in rows {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.period,
                full(r.in_band),
                full(r.over),
                full(r.under)
            ));
        }
        files.push((format!("electricity_{firm}.csv"), s));
    }
    files
}

const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a356", "#e15759", "#b07aa1", "#edc948", "#76b7b2", "#9c755f",
];

fn firm_color(report_firms: &[String], firm: &str) -> &'static str {
    let idx = report_firms.iter().position(|f| f == firm).unwrap_or(0);
    PALETTE[idx % PALETTE.len()]
}

/// SVG renderings: a Gantt chart of the contract timeline, stacked
/// cost-breakdown bars, and per-firm stacked demand-source and electricity
/// charts. Every plotted value is also embedded as `data-value`.
pub fn render_svg(report: &MarketReport, periods: usize) -> Vec<(String, String)> {
    let firms: Vec<String> = report.shares.iter().map(|r| r.firm.clone()).collect();
    let mut files = Vec::new();

    // Gantt chart.
    let customers: Vec<&str> = {
        let mut seen = Vec::new();
        for r in &report.timeline {
            if !seen.contains(&r.customer.as_str()) {
                seen.push(r.customer.as_str());
            }
        }
        seen
    };
    let row_h = 24;
    let px_per_period = 40;
    let label_w = 110;
    let width = label_w + periods.max(1) * px_per_period + 20;
    let height = 30 + customers.len() * row_h + 10;
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    );
    s.push_str("<text x=\"10\" y=\"16\">contract timeline</text>\n");
    for (ci, cust) in customers.iter().enumerate() {
        let y = 30 + ci * row_h;
        s.push_str(&format!(
            "<text x=\"10\" y=\"{}\" data-customer=\"{cust}\">{cust}</text>\n",
            y + 15
        ));
        for r in report.timeline.iter().filter(|r| r.customer == *cust) {
            let x = label_w + (r.start - 1) * px_per_period;
            let w = (r.end + 1 - r.start) * px_per_period;
            let color = firm_color(&firms, &r.firm);
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{}\" width=\"{w}\" height=\"{}\" fill=\"{color}\" stroke=\"white\" data-customer=\"{}\" data-firm=\"{}\" data-contract=\"{}\" data-start=\"{}\" data-end=\"{}\"/>\n",
                y + 4,
                row_h - 8,
                r.customer,
                r.firm,
                r.contract,
                r.start,
                r.end
            ));
            s.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" fill=\"white\">{}</text>\n",
                x + 4,
                y + 15,
                r.contract
            ));
        }
    }
    s.push_str("</svg>\n");
    files.push(("timeline.svg".to_string(), s));

    // Cost breakdown: one stacked bar per firm.
    let bar_w = 60;
    let gap = 30;
    let chart_h = 220;
    let width = 60 + report.breakdown.len() * (bar_w + gap);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"11\">\n",
        chart_h + 50
    );
    s.push_str("<text x=\"10\" y=\"16\">cost breakdown (% of firm total)</text>\n");
    for (fi, r) in report.breakdown.iter().enumerate() {
        let x = 40 + fi * (bar_w + gap);
        let mut y = 30.0;
        let parts = [
            ("service", r.service_pct),
            ("electricity", r.electricity_pct),
            ("inventory", r.inventory_pct),
            ("acquisition", r.acquisition_pct),
            ("forfeit", r.forfeit_pct),
        ];
        for (pi, (name, pct)) in parts.iter().enumerate() {
            let v = pct.unwrap_or(0.0);
            let h = chart_h as f64 * v / 100.0;
            s.push_str(&format!(
                "<rect x=\"{x}\" y=\"{y:.2}\" width=\"{bar_w}\" height=\"{h:.2}\" fill=\"{}\" data-firm=\"{}\" data-component=\"{name}\" data-value=\"{}\"/>\n",
                PALETTE[pi % PALETTE.len()],
                r.firm,
                pct_full(*pct)
            ));
            y += h;
        }
        s.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\">{}</text>\n",
            chart_h + 45,
            r.firm
        ));
    }
    s.push_str("</svg>\n");
    files.push(("cost_breakdown.svg".to_string(), s));

    // Demand sources and electricity: stacked bars per period per firm.
    for (firm, rows) in &report.demand_sources {
        let bw = 18;
        let width = 50 + rows.len() * (bw + 6);
        let h = 160;
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"10\">\n",
            h + 40
        );
        s.push_str(&format!(
            "<text x=\"10\" y=\"14\">demand sources: firm {firm}</text>\n"
        ));
        for r in rows {
            let x = 40 + (r.period - 1) * (bw + 6);
            let mut y = 24.0;
            for (name, v) in [
                ("in_house", r.in_house),
                ("swapped", r.swapped),
                ("spot", r.spot),
            ] {
                let hh = h as f64 * v;
                s.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y:.2}\" width=\"{bw}\" height=\"{hh:.2}\" fill=\"{}\" data-period=\"{}\" data-source=\"{name}\" data-value=\"{}\"/>\n",
                    match name {
                        "in_house" => PALETTE[0],
                        "swapped" => PALETTE[1],
                        _ => PALETTE[3],
                    },
                    r.period,
                    full(v)
                ));
                y += hh;
            }
        }
        s.push_str("</svg>\n");
        files.push((format!("demand_sources_{firm}.svg"), s));
    }

    for (firm, rows) in &report.electricity {
        let bw = 18;
        let width = 50 + rows.len() * (bw + 6);
        let h = 160;
        let peak = rows
            .iter()
            .map(|r| r.in_band + r.over)
            .fold(1e-12_f64, f64::max);
        let mut s = format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{}\" font-family=\"sans-serif\" font-size=\"10\">\n",
            h + 40
        );
        s.push_str(&format!(
            "<text x=\"10\" y=\"14\">electricity bands: firm {firm}</text>\n"
        ));
        for r in rows {
            let x = 40 + (r.period - 1) * (bw + 6);
            let mut y = 24.0;
            for (name, v) in [("in_band", r.in_band), ("over", r.over), ("under", r.under)] {
                let hh = h as f64 * v / peak;
                s.push_str(&format!(
                    "<rect x=\"{x}\" y=\"{y:.2}\" width=\"{bw}\" height=\"{hh:.2}\" fill=\"{}\" data-period=\"{}\" data-band=\"{name}\" data-value=\"{}\"/>\n",
                    match name {
                        "in_band" => PALETTE[0],
                        "over" => PALETTE[3],
                        _ => PALETTE[5],
                    },
                    r.period,
                    full(v)
                ));
                y += hh;
            }
        }
        s.push_str("</svg>\n");
        files.push((format!("electricity_{firm}.svg"), s));
    }

    files
}
