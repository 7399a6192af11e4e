//! Loopback tests of the lock-step link: counting, reset semantics,
//! idempotent retransmits, protocol errors, and transport equivalence with
//! the in-process plant.

use std::net::UdpSocket;
use std::time::Duration;

use atfg_core::agent::{Agent, PidAgent};
use atfg_core::dynamics::{self, AircraftConfig, DEFAULT_DT};
use atfg_core::env::{Env, LocalPlant, Plant, TaskConfig};
use atfg_core::error::Error;
use atfg_core::link::{
    spawn, CommandFrame, LinkClient, RemotePlant, SensorFrame, UdpDatagram, KIND_PWM_WRITE,
};
use atfg_testutil::{DropFirstDatagram, LossyDatagram};

fn f32_cmds(n: usize) -> Vec<[f32; 4]> {
    let mut x = 0x853c49e6748fea9bu64;
    (0..n)
        .map(|_| {
            std::array::from_fn(|_| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((x >> 40) & 0xffff) as f32 / 65535.0
            })
        })
        .collect()
}

#[test]
fn lockstep_time_counts_frames() {
    let (addr, stop, join) = spawn(AircraftConfig::iris(), DEFAULT_DT, "127.0.0.1:0").unwrap();
    let mut client = LinkClient::connect(addr).unwrap();
    let n = 250;
    let mut last = None;
    for k in 1..=n {
        let reply = client.pwm_write([0.5; 4]).unwrap();
        assert_eq!(reply.sim_time, (k as f64 * DEFAULT_DT) as f32, "step {k}");
        last = Some(reply);
    }
    assert!(last.unwrap().rotor_omega[0] > 0.0);
    stop.shutdown();
    let counters = join.join().unwrap().unwrap();
    assert_eq!(counters.steps, n as u64);
    assert_eq!(counters.frames, n as u64);
    assert_eq!(counters.drops, 0);
}

#[test]
fn reset_returns_rest_state() {
    let (addr, stop, join) = spawn(AircraftConfig::iris(), DEFAULT_DT, "127.0.0.1:0").unwrap();
    let mut client = LinkClient::connect(addr).unwrap();
    for _ in 0..50 {
        client.pwm_write([0.9, 0.1, 0.8, 0.2]).unwrap();
    }
    let reply = client.reset().unwrap();
    assert_eq!(reply.sim_time, 0.0);
    assert_eq!(reply.gyro, [0.0; 3]);
    assert_eq!(reply.rotor_omega, [0.0; 4]);
    // reset twice: the decoded state is identical
    let again = client.reset().unwrap();
    assert_eq!((again.sim_time, again.gyro, again.rotor_omega), (reply.sim_time, reply.gyro, reply.rotor_omega));
    stop.shutdown();
    join.join().unwrap().unwrap();
}

#[test]
fn duplicate_sequence_replays_cached_reply_without_stepping() {
    let (addr, stop, join) = spawn(AircraftConfig::iris(), DEFAULT_DT, "127.0.0.1:0").unwrap();
    let sock = UdpSocket::bind("127.0.0.1:0").unwrap();
    sock.connect(addr).unwrap();
    sock.set_read_timeout(Some(Duration::from_millis(500))).unwrap();
    let frame = CommandFrame { kind: KIND_PWM_WRITE, sequence: 7, motor_cmd: [0.6; 4] }.encode();
    let mut first = [0u8; 64];
    sock.send(&frame).unwrap();
    let n1 = sock.recv(&mut first).unwrap();
    let mut second = [0u8; 64];
    sock.send(&frame).unwrap();
    let n2 = sock.recv(&mut second).unwrap();
    assert_eq!(&first[..n1], &second[..n2], "retransmit must replay identical bytes");
    let decoded = SensorFrame::decode(&second[..n2]).unwrap();
    assert_eq!(decoded.sim_time, DEFAULT_DT as f32, "sim_time must not advance");
    stop.shutdown();
    let counters = join.join().unwrap().unwrap();
    assert_eq!(counters.steps, 1);
    assert_eq!(counters.retransmits, 1);
    assert_eq!(counters.frames, 2);
}

#[test]
fn malformed_datagrams_are_dropped_and_counted() {
    let (addr, stop, join) = spawn(AircraftConfig::iris(), DEFAULT_DT, "127.0.0.1:0").unwrap();
    let sock = UdpSocket::bind("127.0.0.1:0").unwrap();
    sock.connect(addr).unwrap();
    sock.set_read_timeout(Some(Duration::from_millis(100))).unwrap();
    sock.send(b"not a frame").unwrap();
    let mut bad_magic = CommandFrame { kind: KIND_PWM_WRITE, sequence: 1, motor_cmd: [0.5; 4] }.encode();
    bad_magic[0] = b'Z';
    sock.send(&bad_magic).unwrap();
    let mut buf = [0u8; 64];
    assert!(sock.recv(&mut buf).is_err(), "malformed frames must not be answered");
    stop.shutdown();
    let counters = join.join().unwrap().unwrap();
    assert_eq!(counters.drops, 2);
    assert_eq!(counters.steps, 0);
}

#[test]
fn wrong_magic_reply_is_a_protocol_violation() {
    // a fake server that answers with a corrupted magic
    let sock = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = sock.local_addr().unwrap();
    let fake = std::thread::spawn(move || {
        let mut buf = [0u8; 64];
        let (_, peer) = sock.recv_from(&mut buf).unwrap();
        let mut reply = SensorFrame { sequence: 1, sim_time: 0.0, gyro: [0.0; 3], rotor_omega: [0.0; 4] }.encode();
        reply[0] = b'X';
        sock.send_to(&reply, peer).unwrap();
    });
    let mut client = LinkClient::connect(addr).unwrap();
    client.set_timeout(Duration::from_millis(500));
    match client.pwm_write([0.5; 4]) {
        Err(Error::Protocol(_)) => {}
        other => panic!("expected protocol violation, got {other:?}"),
    }
    fake.join().unwrap();
}

#[test]
fn lost_link_is_distinguished_from_protocol_errors() {
    // nothing listens here
    let sock = UdpSocket::bind("127.0.0.1:0").unwrap();
    let addr = sock.local_addr().unwrap();
    drop(sock);
    let mut client = LinkClient::connect(addr).unwrap();
    client.set_timeout(Duration::from_millis(5));
    client.set_retries(2);
    match client.pwm_write([0.5; 4]) {
        Err(Error::LostLink { attempts }) => assert_eq!(attempts, 3),
        other => panic!("expected lost link, got {other:?}"),
    }
}

#[test]
fn dropped_first_datagram_retransmits_and_steps_once() {
    let (addr, stop, join) = spawn(AircraftConfig::iris(), DEFAULT_DT, "127.0.0.1:0").unwrap();
    let transport = DropFirstDatagram::new(UdpDatagram::connect(addr).unwrap());
    let mut client = LinkClient::with_transport(transport);
    client.set_timeout(Duration::from_millis(30));
    let reply = client.pwm_write([0.7; 4]).unwrap();
    assert_eq!(reply.sim_time, DEFAULT_DT as f32);
    assert_eq!(client.retransmitted_requests, 1);
    stop.shutdown();
    let counters = join.join().unwrap().unwrap();
    assert_eq!(counters.steps, 1, "exactly one simulation step despite the retransmit");
}

#[test]
fn ten_percent_loss_preserves_lockstep_exactness() {
    let cfg = AircraftConfig::iris();
    let (addr, stop, join) = spawn(cfg.clone(), DEFAULT_DT, "127.0.0.1:0").unwrap();
    let lossy = LossyDatagram::new(UdpDatagram::connect(addr).unwrap(), 0.10, 42);
    let mut client = LinkClient::with_transport(lossy);
    client.set_timeout(Duration::from_millis(10));
    client.set_retries(50);

    let commands = f32_cmds(600);
    let mut remote_gyro = Vec::with_capacity(commands.len());
    for cmd in &commands {
        remote_gyro.push(client.pwm_write(*cmd).unwrap());
    }

    // lossless local replay of the same command stream
    let mut state = dynamics::reset_state(&cfg);
    for (k, cmd) in commands.iter().enumerate() {
        state = dynamics::step(&state, cmd.map(f64::from), &cfg, DEFAULT_DT).unwrap();
        let want = [
            state.omega_body.x as f32,
            state.omega_body.y as f32,
            state.omega_body.z as f32,
        ];
        assert_eq!(remote_gyro[k].gyro, want, "diverged at step {k}");
        assert_eq!(remote_gyro[k].sim_time, ((k + 1) as f64 * DEFAULT_DT) as f32);
    }

    stop.shutdown();
    let counters = join.join().unwrap().unwrap();
    assert_eq!(counters.steps, commands.len() as u64, "every distinct sequence steps exactly once");
    assert!(counters.retransmits > 0, "the lossy shim should have forced retransmits");
}

/// Driving the environment through the link on loopback is bit-identical to
/// the in-process plant at wire precision, including a closed-loop agent.
#[test]
fn transport_equivalence_closed_loop() {
    let cfg = AircraftConfig::iris();
    let task = TaskConfig { seed: 99, episode_max: 0.6, ..TaskConfig::episodic() };

    let (addr, stop, join) = spawn(cfg.clone(), task.dt, "127.0.0.1:0").unwrap();
    let remote = RemotePlant::connect(addr).unwrap();
    let mut env_remote = Env::with_plant(&task, remote).unwrap();

    let mut local_plant = LocalPlant::new(cfg.clone(), task.dt).unwrap();
    local_plant.wire_precision = true;
    let mut env_local = Env::with_plant(&task, local_plant).unwrap();

    let mut agent_a = PidAgent::baseline();
    let mut agent_b = PidAgent::baseline();
    agent_a.reset(0);
    agent_b.reset(0);

    let mut res_r = env_remote.reset().unwrap();
    let mut res_l = env_local.reset().unwrap();
    assert_eq!(env_remote.setpoint(), env_local.setpoint());

    for k in 0..600 {
        let act_r = agent_a.act(&res_r.state);
        let act_l = agent_b.act(&res_l.state);
        assert_eq!(act_r, act_l, "actions diverged at step {k}");
        res_r = env_remote.step(act_r).unwrap();
        res_l = env_local.step(act_l).unwrap();
        assert_eq!(res_r.reward.to_bits(), res_l.reward.to_bits(), "reward diverged at step {k}");
        assert_eq!(res_r.info.omega, res_l.info.omega, "gyro diverged at step {k}");
    }

    stop.shutdown();
    join.join().unwrap().unwrap();
}
