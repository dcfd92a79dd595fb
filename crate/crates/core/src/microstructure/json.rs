//! JSON export. Cells are written in global frame coordinates, one object per cell, with
//! every number in 17-significant-digit scientific notation so values round-trip exactly.

use std::io::{self, Write};

use super::{Cell, Microstructure, Phase};

fn num(v: f64) -> String {
    if v == 0.0 {
        "0.0".into()
    } else {
        format!("{v:.16e}")
    }
}

fn list(vals: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = vals.into_iter().map(num).collect();
    format!("[{}]", parts.join(","))
}

fn phase(p: Phase) -> String {
    match p {
        Phase::Well(i) => i.to_string(),
        Phase::AuxA => "\"A\"".into(),
        Phase::AuxB => "\"B\"".into(),
    }
}

fn write_cell(w: &mut impl Write, c: &Cell) -> io::Result<()> {
    let verts: Vec<String> = c.poly.vertices().iter().map(|v| list(*v)).collect();
    let g = c.grad;
    let grad = list((0..3).flat_map(|a| (0..3).map(move |b| g[(a, b)])));
    write!(
        w,
        "{{\"vertices\":[{}],\"gradient\":{},\"offset\":{},\"phase\":{},\"tags\":{{\"j\":{},\"i\":{},\"region\":\"{}\"}}}}",
        verts.join(","),
        grad,
        list(c.offset.iter().copied()),
        phase(c.phase),
        c.tag.j,
        c.tag.sub,
        c.tag.region.name()
    )
}

/// Streams the document; cells are produced block by block, so memory stays proportional to
/// one block.
pub fn write_json(ms: &Microstructure, w: &mut impl Write) -> io::Result<()> {
    let p = &ms.params;
    write!(
        w,
        "{{\"kind\":\"{}\",\"theta\":{},\"r\":{},\"r2\":{},\"j0\":{},",
        ms.kind,
        num(p.theta),
        num(p.r),
        num(p.r2),
        p.j0
    )?;
    if let Some(r) = ms.ramp {
        write!(w, "\"ramp\":{},", num(r))?;
    }
    write!(w, "\"cells\":[")?;
    let mut first = true;
    for b in &ms.blocks {
        let leaves = b.leaf_cells();
        for k in 0..b.copies {
            let o = b.copy_origin(k);
            for c in &leaves {
                if !first {
                    w.write_all(b",\n")?;
                }
                first = false;
                write_cell(w, &c.translate(o))?;
            }
        }
    }
    writeln!(w, "]}}")
}

pub fn to_json_string(ms: &Microstructure) -> String {
    let mut buf = Vec::new();
    write_json(ms, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
