use crate::error::{invalid, Result};

/// Parses `start:stop:step`, a comma list, or a single value.
///
/// Ranges never pass `stop` and include it up to rounding error.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let text = text.trim();
    if text.is_empty() {
        return invalid("empty grid");
    }
    if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let [start, stop, step] = parts[..] else {
            return invalid(format!("grid {text:?} is not start:stop:step"));
        };
        let (start, stop, step) = (number(start)?, number(stop)?, number(step)?);
        if !(step > 0.0) {
            return invalid(format!("grid step must be positive in {text:?}"));
        }
        if stop < start {
            return invalid(format!("grid stop lies below start in {text:?}"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count).map(|i| start + i as f64 * step).collect());
    }
    text.split(',').map(number).collect()
}

/// A grid of positive integers such as site counts.
pub fn parse_int_grid(text: &str) -> Result<Vec<usize>> {
    parse_grid(text)?
        .into_iter()
        .map(|x| {
            let r = x.round();
            if (x - r).abs() > 1e-9 || r < 1.0 {
                invalid(format!("{x} is not a positive integer"))
            } else {
                Ok(r as usize)
            }
        })
        .collect()
}

fn number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .map_or_else(|| invalid(format!("{s:?} is not a number")), Ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_stop() {
        let g = parse_grid("0:0.5:0.05").unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 0.5).abs() < 1e-12);
        assert_eq!(
            parse_int_grid("4:16:2").unwrap(),
            vec![4, 6, 8, 10, 12, 14, 16]
        );
        assert_eq!(parse_grid("0:1:0.3").unwrap().len(), 4);
        assert_eq!(parse_grid("0:1:0.4").unwrap().len(), 3);
    }

    #[test]
    fn lists_and_errors() {
        assert_eq!(parse_grid("0.1,0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_int_grid("12").unwrap(), vec![12]);
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_int_grid("2.5").is_err());
    }
}
