use arena_sim::plot::plot_all;
use arena_sim::record::{read_csv, write_csv, Record, CSV_HEADER};
use arena_sim::scenario::{Backend, Kernel, Model, ScenarioConfig};
use arena_sim::sweep;

const GOLDEN_HEADER: &str = "kernel,size,seed,nodes,model,backend,total_cycles,work_cycles,serial_cycles,speedup,task_bytes,essential_bytes,nonessential_bytes,total_bytes,bytes_vs_bsp,tokens_created,tokens_spawned,tokens_merged,tokens_split,tokens_forwarded,tokens_executed,tokens_orphaned,token_hops,duplicate_work,reconfigurations,busy_cycles,idle_cycles,oracle_ok,digest";

fn small_sweep() -> Vec<Record> {
    let mut cfg = ScenarioConfig::new(Kernel::Sssp, 48, 1, 1);
    cfg.workload.density = 0.1;
    let mut rows = sweep(&cfg, &[1, 2, 4], &[Model::Arena, Model::Bsp], &[Backend::Cpu, Backend::Cgra]).unwrap();
    let mut nw = ScenarioConfig::new(Kernel::Nw, 32, 1, 1);
    nw.workload.block = 8;
    rows.extend(sweep(&nw, &[1, 2], &[Model::Arena, Model::Bsp], &[Backend::Cgra]).unwrap());
    rows
}

#[test]
fn header_is_stable() {
    assert_eq!(CSV_HEADER, GOLDEN_HEADER);
    let mut buf = Vec::new();
    write_csv(&mut buf, &small_sweep()).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some(GOLDEN_HEADER));
}

#[test]
fn zero_fields_are_written_not_omitted() {
    let mut buf = Vec::new();
    write_csv(&mut buf, &[Record::default()]).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let row = text.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols.len(), GOLDEN_HEADER.split(',').count());
    assert!(cols[6..28].iter().all(|c| *c == "0" || *c == "0.0" || *c == "false"), "{row}");
}

#[test]
fn csv_round_trip_reproduces_plots() {
    let rows = small_sweep();
    assert_eq!(rows[0].model, "serial");
    assert_eq!(rows[0].speedup, 1.0);
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, rows);

    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let fa = plot_all(&rows, a.path()).unwrap();
    let fb = plot_all(&back, b.path()).unwrap();
    assert_eq!(fa.len(), 3);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(x.file_name(), y.file_name());
        let (sx, sy) = (std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        assert!(sx.len() > 1000);
        assert_eq!(sx, sy, "{}", x.display());
    }
    let svg = std::fs::read_to_string(a.path().join("movement.svg")).unwrap();
    assert!(svg.contains("essential data"));
}

#[test]
fn wrong_header_rejected() {
    let text = "kernel,size\nsssp,4\n";
    assert!(read_csv(text.as_bytes()).is_err());
}
