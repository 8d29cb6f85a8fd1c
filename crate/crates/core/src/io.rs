//! CSV formats.
//!
//! Point and dataset files start with a `# chart=<name>` comment line followed
//! by a header row. Lorentz rows hold the full coordinates `x0, x1, ..`; ball
//! and parameter rows hold `n` coordinates. Dataset rows append an integer
//! `label` column. Tree files have the columns `node,parent,x,y`, with an empty
//! parent for the root and empty `x,y` when there is no layout.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{param_to_lorentz, poincare_to_lorentz, Chart, EuclideanParam, LorentzPoint, PoincarePoint};
use crate::svm::LabeledDataset;
use crate::treeembed::TreeInstance;

fn column_names(chart: Chart, len: usize) -> Vec<String> {
    match chart {
        Chart::Lorentz => (0..len).map(|i| format!("x{i}")).collect(),
        Chart::Poincare => (1..=len).map(|i| format!("x{i}")).collect(),
        Chart::Param => (1..=len).map(|i| format!("z{i}")).collect(),
    }
}

/// Splits off the `# chart=` line and returns the chart with the remaining text.
fn split_chart_header(text: &str) -> Result<(Chart, &str)> {
    let text = text.trim_start_matches('\u{feff}');
    let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
    let value = first
        .trim()
        .strip_prefix('#')
        .map(str::trim)
        .and_then(|s| s.strip_prefix("chart="))
        .ok_or_else(|| Error::Parse("missing `# chart=` header line".into()))?;
    Ok((value.parse()?, rest))
}

fn parse_f64(field: &str, row: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {row}: `{field}` is not a number")))
}

fn rows(body: &str) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        out.push(rec?.iter().map(str::to_owned).collect());
    }
    Ok(out)
}

fn to_lorentz(chart: Chart, coords: Vec<f64>) -> Result<LorentzPoint> {
    match chart {
        Chart::Lorentz => LorentzPoint::from_coords(&coords),
        Chart::Poincare => poincare_to_lorentz(&PoincarePoint::new(coords)?),
        Chart::Param => param_to_lorentz(&EuclideanParam::new(coords)),
    }
}

pub fn write_points<W: Write>(out: W, chart: Chart, points: &[Vec<f64>]) -> Result<()> {
    let mut out = out;
    writeln!(out, "# chart={chart}")?;
    let mut w = csv::Writer::from_writer(out);
    let len = points.first().map_or(0, Vec::len);
    w.write_record(column_names(chart, len))?;
    for p in points {
        w.write_record(p.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points<R: Read>(mut input: R) -> Result<(Chart, Vec<Vec<f64>>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (chart, body) = split_chart_header(&text)?;
    let points = rows(body)?
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.iter().map(|f| parse_f64(f, i + 1)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok((chart, points))
}

/// Writes the dataset in `chart` coordinates.
pub fn write_dataset<W: Write>(out: W, chart: Chart, data: &LabeledDataset) -> Result<()> {
    let coords: Vec<Vec<f64>> = match chart {
        Chart::Lorentz => data.points.iter().map(|p| p.coords()).collect(),
        Chart::Poincare => data.poincare_view()?,
        Chart::Param => data.param_view(),
    };
    let mut out = out;
    writeln!(out, "# chart={chart}")?;
    let mut w = csv::Writer::from_writer(out);
    let len = coords.first().map_or(0, Vec::len);
    let mut header = column_names(chart, len);
    header.push("label".into());
    w.write_record(&header)?;
    for (p, l) in coords.iter().zip(&data.labels) {
        let mut rec: Vec<String> = p.iter().map(f64::to_string).collect();
        rec.push(l.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// The class count is one more than the largest label.
pub fn read_dataset<R: Read>(mut input: R) -> Result<LabeledDataset> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (chart, body) = split_chart_header(&text)?;
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (i, r) in rows(body)?.into_iter().enumerate() {
        let (label, feats) = r
            .split_last()
            .ok_or_else(|| Error::Parse(format!("row {}: empty", i + 1)))?;
        if feats.is_empty() {
            return Err(Error::Parse(format!("row {}: no feature columns", i + 1)));
        }
        let label: usize = label
            .parse()
            .map_err(|_| Error::Parse(format!("row {}: `{label}` is not a class id", i + 1)))?;
        let coords = feats.iter().map(|f| parse_f64(f, i + 1)).collect::<Result<Vec<_>>>()?;
        points.push(to_lorentz(chart, coords)?);
        labels.push(label);
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    LabeledDataset::new(points, labels, n_classes)
}

/// Rooted at node 0.
pub fn write_tree<W: Write>(out: W, t: &TreeInstance) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["node", "parent", "x", "y"])?;
    let parents = t.parents(0);
    for (i, p) in parents.iter().enumerate() {
        let parent = p.map(|p| p.to_string()).unwrap_or_default();
        let (x, y) = match t.layout() {
            Some(l) => (l[i][0].to_string(), l[i][1].to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([i.to_string(), parent, x, y])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_tree<R: Read>(input: R) -> Result<TreeInstance> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input);
    let mut nodes = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let field = |j: usize| rec.get(j).unwrap_or("");
        let node: usize = field(0)
            .parse()
            .map_err(|_| Error::Parse(format!("row {row}: bad node id `{}`", field(0))))?;
        let parent = match field(1) {
            "" => None,
            s => Some(s.parse::<usize>().map_err(|_| Error::Parse(format!("row {row}: bad parent `{s}`")))?),
        };
        let xy = match (field(2), field(3)) {
            ("", "") => None,
            (x, y) => Some([parse_f64(x, row)?, parse_f64(y, row)?]),
        };
        nodes.push((node, parent, xy));
    }
    let n = nodes.len();
    let mut seen = vec![false; n];
    for &(node, _, _) in &nodes {
        if node >= n || std::mem::replace(&mut seen[node], true) {
            return Err(Error::Parse(format!("node ids must be 0..{n} without repeats")));
        }
    }
    let edges = nodes.iter().filter_map(|&(c, p, _)| p.map(|p| (p, c))).collect();
    let t = TreeInstance::new(n, edges)?;
    if nodes.iter().all(|(_, _, xy)| xy.is_some()) && n > 0 {
        let mut layout = vec![[0.0; 2]; n];
        for (node, _, xy) in &nodes {
            layout[*node] = xy.expect("checked");
        }
        return t.with_layout(layout);
    }
    Ok(t)
}

/// `epoch,loss` rows.
pub fn write_loss<W: Write>(out: W, losses: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "loss"])?;
    for (i, l) in losses.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

pub fn read_dataset_file(path: &Path) -> Result<LabeledDataset> {
    read_dataset(File::open(path)?)
}

pub fn read_tree_file(path: &Path) -> Result<TreeInstance> {
    read_tree(File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::gen_gmm_poincare;
    use crate::treeembed::{generate_tree, TreeKind};

    #[test]
    fn points_round_trip_exactly() {
        let pts = vec![vec![0.1, -0.25], vec![1.0 / 3.0, 1e-300]];
        let mut buf = Vec::new();
        write_points(&mut buf, Chart::Poincare, &pts).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# chart=poincare\nx1,x2\n"));
        assert_eq!(read_points(&buf[..]).unwrap(), (Chart::Poincare, pts));
    }

    #[test]
    fn dataset_round_trip_in_every_chart() {
        let d = gen_gmm_poincare(3, 30, 2).unwrap();
        for chart in [Chart::Lorentz, Chart::Poincare, Chart::Param] {
            let mut buf = Vec::new();
            write_dataset(&mut buf, chart, &d).unwrap();
            let back = read_dataset(&buf[..]).unwrap();
            assert_eq!(back.labels, d.labels);
            assert_eq!(back.n_classes, 3);
            for (a, b) in back.points.iter().zip(&d.points) {
                let rel = crate::linalg::max_abs_diff(&a.coords(), &b.coords()) / b.time();
                assert!(rel < 1e-12, "{chart}: {rel}");
            }
        }
    }

    #[test]
    fn missing_header_is_an_error() {
        assert!(read_dataset("x1,x2,label\n0.1,0.2,0\n".as_bytes()).is_err());
        assert!(read_dataset("# chart=sphere\nx1,label\n0.1,0\n".as_bytes()).is_err());
    }

    #[test]
    fn outside_ball_is_rejected() {
        assert!(read_dataset("# chart=poincare\nx1,x2,label\n1.0,0.2,0\n".as_bytes()).is_err());
    }

    #[test]
    fn tree_round_trip() {
        let t = generate_tree(TreeKind::Random { n: 12 }, 4).unwrap();
        let mut buf = Vec::new();
        write_tree(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 13);
        let back = read_tree(&buf[..]).unwrap();
        assert_eq!(back.len(), 12);
        assert_eq!(back.layout(), t.layout());
        let mut a: Vec<_> = t.edges().iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
        let mut b: Vec<_> = back.edges().iter().map(|&(x, y)| (x.min(y), x.max(y))).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }

    #[test]
    fn tree_without_layout() {
        let t = read_tree("node,parent,x,y\n0,,,\n1,0,,\n2,0,,\n".as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.layout().is_none());
        assert!(read_tree("node,parent,x,y\n0,,,\n1,5,,\n".as_bytes()).is_err());
        assert!(read_tree("node,parent,x,y\n0,,,\n0,,,\n".as_bytes()).is_err());
    }
}
