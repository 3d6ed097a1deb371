use std::io::Write;

use super::Ledger;
use crate::error::Result;

/// Column order of the tab-separated ledger dump. One row per NFT.
///
/// `theta` is `id:slot` pairs joined by `;`, `weights` is `w0;w1;...`, and
/// `settled_payoff` is empty while the NFT is live.
pub const DUMP_COLUMNS: [&str; 12] = [
    "id",
    "publisher",
    "height",
    "theta",
    "weights",
    "quality",
    "price",
    "pi_r",
    "lambda",
    "d",
    "settled",
    "settled_payoff",
];

pub fn write_dump<W: Write>(ledger: &Ledger, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    w.write_record(DUMP_COLUMNS)?;
    for n in ledger.nfts() {
        let theta = n
            .theta
            .iter()
            .map(|r| format!("{}:{}", r.id.0, r.slot.as_str()))
            .collect::<Vec<_>>()
            .join(";");
        let weights = n.weights.components().map(|x| x.to_string()).collect::<Vec<_>>().join(";");
        w.write_record([
            n.id.0.to_string(),
            n.publisher.map(|p| p.to_string()).unwrap_or_else(|| "genesis".into()),
            n.height.to_string(),
            theta,
            weights,
            n.quality.to_string(),
            n.price.to_string(),
            n.pi_r.to_string(),
            n.lambda.to_string(),
            n.terms.d.to_string(),
            n.settled.to_string(),
            n.settled_payoff.map(|p| p.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::NftKind;
    use crate::market::MarketParams;

    #[test]
    fn one_row_per_nft_with_header() {
        let mut l = Ledger::new(MarketParams::default()).unwrap();
        l.seed_genesis(NftKind::Dataset, 0.5, 0.25).unwrap();
        l.seed_genesis(NftKind::Model, 0.75, 0.5).unwrap();
        let mut buf = Vec::new();
        write_dump(&l, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0].split('\t').count(), DUMP_COLUMNS.len());
        assert_eq!(lines[1], "0\tgenesis\t0\t\t1\t0.5\t0.25\t0\t1\t10\tfalse\t");
    }
}
