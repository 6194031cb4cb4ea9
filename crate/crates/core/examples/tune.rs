use gestura_core::*;
use std::f64::consts::PI;

fn main() {
    let t = PsiTable::default();
    let m = ArticulatoryMap::default_map(&t);
    println!("neutral len {:.2}", m.neutral.total_length());
    for (name, theta) in [("u", PI/3.0), ("o", 5.0*PI/9.0), ("oo", 7.0*PI/9.0), ("a", PI), ("eh", 11.0*PI/9.0), ("e", 13.0*PI/9.0), ("i", 5.0*PI/3.0)] {
        let p = coordinate(PolarPoint::new(1.0, theta).unwrap(), &t).unwrap();
        let area = area_from_parameters(&p, &m);
        let est = formants(&area, 4);
        let lip = area.sections.last().unwrap();
        println!("{name:3} p={:?}", p.p.iter().map(|v| (v*100.0).round()/100.0).collect::<Vec<_>>());
        println!("    F = {:?} valid={} lip area {:.3} len {:.2}", est.freqs.iter().map(|f| f.round()).collect::<Vec<_>>(), est.valid, lip.area, lip.length);
    }
    let p0 = coordinate(PolarPoint::new(0.0, 0.0).unwrap(), &t).unwrap();
    let est0 = formants(&area_from_parameters(&p0, &m), 4);
    println!("neutral F = {:?}", est0.freqs.iter().map(|f| f.round()).collect::<Vec<_>>());
}
